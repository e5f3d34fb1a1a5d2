#!/usr/bin/env node
import { mkdirSync, realpathSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { FIGURE_NAMES, type FigureName, buildFigure } from "./figures.js";
import { rasterize } from "./raster.js";
import { renderSvg } from "./render.js";

const USAGE = "usage: plots <fig3|fig4|fig5|fig6|all> --in DIR --out DIR";

export interface CliArgs {
  figures: FigureName[];
  inDir: string;
  outDir: string;
}

export function parseArgs(argv: string[]): CliArgs {
  const positional: string[] = [];
  let inDir: string | undefined;
  let outDir: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--in" || arg === "--out") {
      const value = argv[++i];
      if (value === undefined) throw new Error(`${arg} needs a value\n${USAGE}`);
      if (arg === "--in") inDir = value;
      else outDir = value;
    } else if (arg.startsWith("-")) {
      throw new Error(`unknown option ${arg}\n${USAGE}`);
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 1 || inDir === undefined || outDir === undefined) {
    throw new Error(USAGE);
  }
  const which = positional[0];
  const figures =
    which === "all"
      ? FIGURE_NAMES
      : FIGURE_NAMES.filter((name) => name === which);
  if (figures.length === 0) {
    throw new Error(`unknown figure ${JSON.stringify(which)}\n${USAGE}`);
  }
  return { figures, inDir, outDir };
}

/** Build and write the requested figures; returns the emitted paths. */
export function run(args: CliArgs): string[] {
  mkdirSync(args.outDir, { recursive: true });
  const written: string[] = [];
  for (const name of args.figures) {
    const model = buildFigure(name, args.inDir);
    const png = rasterize(renderSvg(model), model.widthIn);
    const path = join(args.outDir, `${name}.png`);
    writeFileSync(path, png);
    written.push(path);
  }
  return written;
}

export function main(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
  try {
    for (const path of run(args)) console.log(path);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  return 0;
}

function invokedDirectly(): boolean {
  if (process.argv[1] === undefined) return false;
  try {
    return realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  process.exit(main(process.argv.slice(2)));
}
