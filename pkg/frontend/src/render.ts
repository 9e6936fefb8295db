/**
 * The three figure families rendered from run artifacts:
 *   belief_snapshots.svg    grid of per-snapshot belief bar charts
 *   velocity_deviation.svg  per-class v(t) - v(0), active/passive overlay
 *   cumulative_control.svg  per-class running integral of |a|, overlay
 */
import { writeFileSync } from "fs";
import { mkdirSync } from "fs";
import path from "path";

import {
  ComparisonSet,
  InvariantViolation,
  RunArtifacts,
  VEHICLE_CLASSES,
  cumulativeControl,
  velocityDeviation,
} from "./schema.js";
import { Frame, axes, document as svgDoc, legend, polyline, xPix, yPix } from "./svg.js";

const CLASS_COLORS: Record<string, string> = {
  robot: "#d4a017",
  human: "#d2691e",
  background: "#4169aa",
};

const CONSISTENCY_TOL = 1e-6;

function frame(width: number, height: number, xMin: number, xMax: number,
               yMin: number, yMax: number): Frame {
  const pad = 0.05 * (yMax - yMin || 1);
  return { width, height, left: 56, right: 20, top: 24, bottom: 34,
           xMin, xMax, yMin: yMin - pad, yMax: yMax + pad };
}

function renderBeliefSnapshots(run: RunArtifacts): string {
  const rows = run.beliefs;
  const n = rows.length;
  const cols = Math.min(3, n);
  const gridRows = Math.ceil(n / cols);
  const cellW = 260;
  const cellH = 150;
  const width = cols * cellW + 40;
  const height = gridRows * cellH + 50;
  const parts: string[] = [];
  parts.push(`<text x="${width / 2}" y="18" font-size="14" font-weight="bold" text-anchor="middle">Belief snapshots (${run.mode}, every 10 s)</text>`);
  const unit = run.gridKind === "desired-velocity" ? "m/s" : "m";
  rows.forEach((row, i) => {
    const cx = 30 + (i % cols) * cellW;
    const cy = 34 + Math.floor(i / cols) * cellH;
    const pMax = Math.max(...row.probs);
    const innerW = cellW - 50;
    const innerH = cellH - 46;
    const barW = innerW / row.probs.length;
    let argmax = 0;
    row.probs.forEach((p, k) => { if (p > row.probs[argmax]) argmax = k; });
    parts.push(`<rect x="${cx}" y="${cy}" width="${cellW - 20}" height="${cellH - 16}" fill="none" stroke="#ccc"/>`);
    parts.push(`<text x="${cx + 6}" y="${cy + 14}" font-size="10">t = ${row.t} s</text>`);
    row.probs.forEach((p, k) => {
      const h = (p / (pMax || 1)) * innerH;
      const x = cx + 14 + k * barW;
      const y = cy + (cellH - 26) - h;
      const fill = k === argmax ? "#c0392b" : "#4169aa";
      parts.push(`<rect x="${x.toFixed(1)}" y="${y.toFixed(1)}" width="${Math.max(barW - 1, 1).toFixed(1)}" height="${h.toFixed(1)}" fill="${fill}"/>`);
    });
    const value = run.gridValues[argmax];
    parts.push(`<text x="${cx + 6}" y="${cy + cellH - 20}" font-size="9" fill="#c0392b">argmax #${argmax + 1} -> ${value.toFixed(2)} ${unit}</text>`);
  });
  return svgDoc(width, height, parts.join("\n"));
}

function seriesFigure(set: ComparisonSet, title: string, yLabel: string,
                      series: (run: RunArtifacts, cls: string) => number[],
                      annotateTerminal = false): string {
  const width = 820;
  const height = 500;
  const runs: { run: RunArtifacts; dashed: boolean; tag: string }[] = [
    { run: set.active, dashed: false, tag: set.active.mode },
  ];
  if (set.baseline) {
    runs.push({ run: set.baseline, dashed: true, tag: set.baseline.mode });
  }
  let yMin = Infinity;
  let yMax = -Infinity;
  let xMax = 0;
  const curves: { xs: number[]; ys: number[]; color: string; dashed: boolean; label: string }[] = [];
  for (const { run, dashed, tag } of runs) {
    for (const cls of VEHICLE_CLASSES) {
      const ys = series(run, cls);
      const xs = run.timeseries.slice(0, ys.length).map((r) => r.t);
      yMin = Math.min(yMin, ...ys);
      yMax = Math.max(yMax, ...ys);
      xMax = Math.max(xMax, xs[xs.length - 1]);
      curves.push({ xs, ys, color: CLASS_COLORS[cls], dashed,
                    label: `${cls} (${tag})` });
    }
  }
  const f = frame(width, height, 0, xMax, Math.min(yMin, 0), Math.max(yMax, 0));
  const parts = [axes(f, "time [s]", yLabel, title)];
  for (const c of curves) parts.push(polyline(f, c.xs, c.ys, c.color, c.dashed));
  parts.push(legend(f, curves.map((c) => ({ label: c.label, color: c.color, dashed: c.dashed }))));
  if (annotateTerminal) {
    for (const c of curves) {
      const yT = c.ys[c.ys.length - 1];
      const px = xPix(f, c.xs[c.xs.length - 1]);
      const py = yPix(f, yT);
      parts.push(`<text x="${(px - 4).toFixed(1)}" y="${(py - 4).toFixed(1)}" font-size="9" text-anchor="end" fill="${c.color}">${yT.toFixed(2)}</text>`);
    }
  }
  return svgDoc(width, height, parts.join("\n"));
}

function checkSummaryConsistency(run: RunArtifacts): void {
  for (const cls of VEHICLE_CLASSES) {
    const curve = cumulativeControl(run, cls);
    const terminal = curve.length ? curve[curve.length - 1] : 0;
    const reported = Number(run.summary.get(`cumulative_abs_control.${cls}`));
    if (!Number.isFinite(reported) || Math.abs(terminal - reported) > CONSISTENCY_TOL) {
      throw new InvariantViolation(
        `cumulative control for ${cls} recomputes to ${terminal} but the ` +
        `summary says ${reported} (${run.dir})`);
    }
  }
}

export interface RenderResult {
  files: string[];
}

export function render(set: ComparisonSet, outDir: string): RenderResult {
  checkSummaryConsistency(set.active);
  if (set.baseline) checkSummaryConsistency(set.baseline);
  mkdirSync(outDir, { recursive: true });
  const files: string[] = [];
  const emit = (name: string, content: string) => {
    const file = path.join(outDir, name);
    writeFileSync(file, content);
    files.push(file);
  };
  emit("belief_snapshots.svg", renderBeliefSnapshots(set.active));
  emit("velocity_deviation.svg",
       seriesFigure(set, "Velocity deviation", "v(t) - v(0) [m/s]",
                    (run, cls) => velocityDeviation(run, cls as never)));
  emit("cumulative_control.svg",
       seriesFigure(set, "Cumulative absolute control", "integral |a| dt [m/s]",
                    (run, cls) => cumulativeControl(run, cls as never), true));
  return { files };
}
