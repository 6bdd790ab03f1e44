#!/usr/bin/env node
/**
 * report --in CSV... --out DIR
 *
 * Renders bench CSVs (fetch-add and/or queue schemas) into three SVG
 * chart families plus summary.md.  Exits 1 on usage or schema errors,
 * writing nothing.
 */

import { pathToFileURL } from "node:url";

import { renderReport, SchemaError } from "./render.js";

function usage(): string {
  return "usage: report --in CSV [CSV...] --out DIR";
}

export function main(argv: string[]): number {
  const inputs: string[] = [];
  let outDir: string | null = null;

  let i = 0;
  while (i < argv.length) {
    const arg = argv[i]!;
    if (arg === "--in") {
      i++;
      while (i < argv.length && !argv[i]!.startsWith("--")) {
        inputs.push(argv[i]!);
        i++;
      }
    } else if (arg === "--out") {
      i++;
      if (i >= argv.length) {
        console.error(`--out needs a directory\n${usage()}`);
        return 1;
      }
      outDir = argv[i]!;
      i++;
    } else if (arg === "--help" || arg === "-h") {
      console.log(usage());
      return 0;
    } else {
      console.error(`unknown argument ${arg}\n${usage()}`);
      return 1;
    }
  }

  if (inputs.length === 0 || outDir === null) {
    console.error(usage());
    return 1;
  }

  try {
    const written = renderReport(inputs, outDir);
    for (const file of written) console.log(file);
    return 0;
  } catch (error) {
    if (error instanceof SchemaError) {
      console.error(error.message);
      return 1;
    }
    throw error;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
