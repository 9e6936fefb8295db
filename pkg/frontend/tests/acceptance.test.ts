/**
 * S1: given the scenario-1 active (P1) and passive (P2) run directories,
 * render emits all three figure families without error, with non-empty
 * image files and terminal cumulative-control values matching the
 * summaries within 1e-6.
 *
 * The run directories are produced by the primary package's CLI; they are
 * generated here on first use (python3 -m probedrive.cli).
 */
import { execFileSync } from "child_process";
import { existsSync, mkdtempSync, readFileSync, statSync } from "fs";
import { tmpdir } from "os";
import path from "path";
import { describe, expect, it } from "vitest";

import { cumulativeControl, loadComparison } from "../src/schema.js";
import { render } from "../src/render.js";

const TESTDATA = path.join(__dirname, "testdata");
const P1_DIR = path.join(TESTDATA, "p1-active");
const P2_DIR = path.join(TESTDATA, "p2-passive");

function ensureRun(dir: string, mode: string): void {
  if (existsSync(path.join(dir, "summary.txt"))) return;
  execFileSync("python3", ["-m", "probedrive.cli",
    "--scenario", "lane-advise", "--mode", mode, "--out", dir],
    { stdio: "pipe", timeout: 300_000 });
}

describe("S1 report generation from the P1/P2 runs", () => {
  it("renders both figure sets with consistent terminal values", () => {
    ensureRun(P1_DIR, "active");
    ensureRun(P2_DIR, "passive");

    const set = loadComparison(P1_DIR, P2_DIR);
    const out = mkdtempSync(path.join(tmpdir(), "report-s1-"));
    const result = render(set, out);

    expect(result.files.length).toBe(3);
    for (const f of result.files) {
      expect(statSync(f).size).toBeGreaterThan(500);
      expect(readFileSync(f, "utf8")).toContain("</svg>");
    }
    for (const run of [set.active, set.baseline!]) {
      for (const cls of ["robot", "human", "background"] as const) {
        const curve = cumulativeControl(run, cls);
        const reported = Number(
          run.summary.get(`cumulative_abs_control.${cls}`));
        expect(Math.abs(curve[curve.length - 1] - reported))
          .toBeLessThanOrEqual(1e-6);
      }
    }
  }, 360_000);
});
