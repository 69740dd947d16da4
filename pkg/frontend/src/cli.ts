#!/usr/bin/env node
import { loadSpec } from "./spec.js";
import { render } from "./render.js";
import { MissingColumnError } from "./csv.js";

function usage(): void {
  process.stderr.write("usage: sphavg-plot [plot] <spec.json>\n");
}

export function main(argv: string[]): number {
  const args = argv[0] === "plot" ? argv.slice(1) : argv;
  if (args.length !== 1) {
    usage();
    return 2;
  }
  try {
    const out = render(loadSpec(args[0]));
    process.stdout.write(`wrote ${out}\n`);
    return 0;
  } catch (err) {
    if (err instanceof MissingColumnError) {
      process.stderr.write(`schema error: ${err.message}\n`);
    } else {
      process.stderr.write(`error: ${(err as Error).message}\n`);
    }
    return 1;
  }
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js") || process.argv[1]?.endsWith("sphavg-plot");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
