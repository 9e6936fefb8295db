/**
 * Parsing and validation of probedrive run artifacts.
 *
 * A run directory holds exactly:
 *   timeseries.csv  per-step states/controls (fixed column order)
 *   beliefs.csv     t plus one probability column per hypothesis
 *   summary.txt     flat "key = value" document
 */
import { readFileSync } from "fs";
import path from "path";

export class MissingArtifact extends Error {}
export class SchemaMismatch extends Error {}
export class InvariantViolation extends Error {}

export interface StepRow {
  t: number;
  phase: string;
  robot: { x: number; v: number; lane: number; a: number };
  human: { x: number; v: number; lane: number; a: number };
  background: { x: number; v: number; a: number }[];
}

export interface BeliefRow {
  t: number;
  probs: number[];
}

export interface RunArtifacts {
  dir: string;
  timeseries: StepRow[];
  beliefs: BeliefRow[];
  summary: Map<string, string>;
  scenario: string;
  mode: string;
  duration: number;
  dt: number;
  gridKind: string;
  gridValues: number[];
}

const BELIEF_SUM_TOL = 1e-6;

function readArtifact(dir: string, name: string): string {
  const file = path.join(dir, name);
  try {
    return readFileSync(file, "utf8");
  } catch {
    throw new MissingArtifact(`missing artifact: ${file}`);
  }
}

function parseSummary(text: string): Map<string, string> {
  const out = new Map<string, string>();
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (!line) continue;
    const idx = line.indexOf(" = ");
    if (idx < 0) throw new SchemaMismatch(`bad summary line: ${line}`);
    out.set(line.slice(0, idx), line.slice(idx + 3));
  }
  return out;
}

function parseTimeseries(text: string): StepRow[] {
  const lines = text.trim().split("\n");
  const header = lines[0].split(",");
  const fixed = ["t", "phase", "robot_x", "robot_v", "robot_lane", "robot_a",
    "human_x", "human_v", "human_lane", "human_a"];
  for (let i = 0; i < fixed.length; i++) {
    if (header[i] !== fixed[i]) {
      throw new SchemaMismatch(
        `timeseries column ${i} is '${header[i]}', expected '${fixed[i]}'`);
    }
  }
  if ((header.length - fixed.length) % 3 !== 0) {
    throw new SchemaMismatch(
      `timeseries has ${header.length} columns; background columns must come in x/v/a triples`);
  }
  const nBg = (header.length - fixed.length) / 3;
  const rows: StepRow[] = [];
  for (let li = 1; li < lines.length; li++) {
    const parts = lines[li].split(",");
    if (parts.length !== header.length) {
      throw new SchemaMismatch(
        `timeseries row ${li} has ${parts.length} columns, expected ${header.length}`);
    }
    const num = (i: number) => Number(parts[i]);
    const background = [];
    for (let b = 0; b < nBg; b++) {
      const o = fixed.length + 3 * b;
      background.push({ x: num(o), v: num(o + 1), a: num(o + 2) });
    }
    rows.push({
      t: num(0),
      phase: parts[1],
      robot: { x: num(2), v: num(3), lane: num(4), a: num(5) },
      human: { x: num(6), v: num(7), lane: num(8), a: num(9) },
      background,
    });
  }
  return rows;
}

function parseBeliefs(text: string): BeliefRow[] {
  const lines = text.trim().split("\n");
  const header = lines[0].split(",");
  if (header[0] !== "t") throw new SchemaMismatch("beliefs.csv must start with a t column");
  const n = header.length - 1;
  const rows: BeliefRow[] = [];
  for (let li = 1; li < lines.length; li++) {
    const parts = lines[li].split(",").map(Number);
    if (parts.length !== n + 1) {
      throw new SchemaMismatch(
        `beliefs row ${li} has ${parts.length} columns, expected ${n + 1}`);
    }
    const probs = parts.slice(1);
    const sum = probs.reduce((acc, p) => acc + p, 0);
    if (Math.abs(sum - 1.0) > BELIEF_SUM_TOL) {
      throw new InvariantViolation(
        `beliefs row ${li} (t=${parts[0]}) sums to ${sum.toPrecision(9)}`);
    }
    rows.push({ t: parts[0], probs });
  }
  return rows;
}

export function loadRun(dir: string): RunArtifacts {
  const summary = parseSummary(readArtifact(dir, "summary.txt"));
  const timeseries = parseTimeseries(readArtifact(dir, "timeseries.csv"));
  const beliefs = parseBeliefs(readArtifact(dir, "beliefs.csv"));

  const need = (key: string): string => {
    const v = summary.get(key);
    if (v === undefined) throw new SchemaMismatch(`summary is missing ${key}`);
    return v;
  };
  const base = Number(need("config.model.grid_base"));
  const step = Number(need("config.model.grid_step"));
  const size = Number(need("config.model.grid_size"));
  const gridValues = Array.from({ length: size }, (_, k) => base + k * step);
  return {
    dir,
    timeseries,
    beliefs,
    summary,
    scenario: need("config.scenario"),
    mode: need("config.mode"),
    duration: Number(need("config.duration")),
    dt: Number(need("config.dynamics.dt")),
    gridKind: need("config.model.grid_kind"),
    gridValues,
  };
}

/** One or two runs being drawn together; overlays must be comparable. */
export interface ComparisonSet {
  active: RunArtifacts;
  baseline?: RunArtifacts;
}

export function loadComparison(runDir: string, baselineDir?: string): ComparisonSet {
  const active = loadRun(runDir);
  if (!baselineDir) return { active };
  const baseline = loadRun(baselineDir);
  if (baseline.scenario !== active.scenario) {
    throw new SchemaMismatch(
      `cannot overlay scenarios '${active.scenario}' and '${baseline.scenario}'`);
  }
  if (Math.abs(baseline.duration - active.duration) > 1e-9) {
    throw new SchemaMismatch(
      `cannot overlay durations ${active.duration} s and ${baseline.duration} s`);
  }
  return { active, baseline };
}

export type VehicleClass = "robot" | "human" | "background";
export const VEHICLE_CLASSES: VehicleClass[] = ["robot", "human", "background"];

/** Class-averaged v(t) - v(0) series. */
export function velocityDeviation(run: RunArtifacts, cls: VehicleClass): number[] {
  const rows = run.timeseries;
  if (cls === "background") {
    const n = rows[0].background.length;
    if (n === 0) return rows.map(() => 0);
    const v0 = rows[0].background.map((b) => b.v);
    return rows.map((r) =>
      r.background.reduce((acc, b, i) => acc + (b.v - v0[i]), 0) / n);
  }
  const v0 = rows[0][cls].v;
  return rows.map((r) => r[cls].v - v0);
}

/** Running class-averaged integral of |a| in m/s (terminal row carries no control). */
export function cumulativeControl(run: RunArtifacts, cls: VehicleClass): number[] {
  const rows = run.timeseries;
  const out: number[] = [];
  let acc = 0;
  for (let i = 0; i < rows.length - 1; i++) {
    const r = rows[i];
    if (cls === "background") {
      const n = r.background.length;
      if (n > 0) {
        acc += (r.background.reduce((s, b) => s + Math.abs(b.a), 0) / n) * run.dt;
      }
    } else {
      acc += Math.abs(r[cls].a) * run.dt;
    }
    out.push(acc);
  }
  return out;
}
