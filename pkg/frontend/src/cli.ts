#!/usr/bin/env node
/**
 * probedrive-report render <run_dir> [<baseline_dir>] --out <dir>
 *
 * Reads the run artifacts written by the probedrive CLI and emits the three
 * figure families as SVG files. Run directories are never written to.
 */
import { loadComparison } from "./schema.js";
import { render } from "./render.js";

function usage(): void {
  console.error("usage: probedrive-report render <run_dir> [<baseline_dir>] --out <dir>");
}

export function main(argv: string[]): number {
  const args = [...argv];
  if (args[0] !== "render") {
    usage();
    return 1;
  }
  args.shift();
  let outDir: string | undefined;
  const positional: string[] = [];
  while (args.length) {
    const a = args.shift()!;
    if (a === "--out") {
      outDir = args.shift();
    } else if (a.startsWith("--")) {
      console.error(`unknown flag: ${a}`);
      usage();
      return 1;
    } else {
      positional.push(a);
    }
  }
  if (!outDir || positional.length < 1 || positional.length > 2) {
    usage();
    return 1;
  }
  try {
    const set = loadComparison(positional[0], positional[1]);
    const result = render(set, outDir);
    for (const f of result.files) console.log(f);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
