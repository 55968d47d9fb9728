#!/usr/bin/env node
/**
 * zs-mat-exporter: detection export and segmenter serving.
 *
 *   export --frames DIR --prompt TEXT --out FILE [--mock]
 *   serve  [--frames DIR] --transport stdio|tcp:PORT [--mock]
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { exportDetections } from "./export.js";
import { createBackend } from "./segmenter.js";
import { serveStreams, serveTcp } from "./server.js";

async function main(): Promise<void> {
  await yargs(hideBin(process.argv))
    .scriptName("zs-mat-exporter")
    .command(
      "export",
      "export per-frame detections as JSON lines (raw scores)",
      (y) =>
        y
          .option("frames", { type: "string", demandOption: true, describe: "frame image directory" })
          .option("prompt", { type: "string", demandOption: true, describe: "text prompt, e.g. a class name" })
          .option("out", { type: "string", demandOption: true, describe: "output detections file" })
          .option("mock", { type: "boolean", default: false, describe: "use the deterministic mock detector" }),
      (argv) => {
        const n = exportDetections({
          framesDir: argv.frames,
          prompt: argv.prompt,
          outPath: argv.out,
          mock: argv.mock,
        });
        console.error(`exported ${n} frames to ${argv.out}`);
      },
    )
    .command(
      "serve",
      "serve one segmenter session over stdio or TCP",
      (y) =>
        y
          .option("frames", { type: "string", describe: "frame image directory (live backend only)" })
          .option("transport", { type: "string", default: "stdio", describe: "stdio | tcp:PORT" })
          .option("mock", { type: "boolean", default: false, describe: "use the weightless mock segmenter" }),
      async (argv) => {
        const backend = createBackend(argv.mock);
        if (argv.transport === "stdio") {
          await serveStreams(backend, process.stdin, process.stdout);
        } else if (argv.transport.startsWith("tcp:")) {
          const port = Number(argv.transport.slice(4));
          if (!Number.isInteger(port) || port <= 0) {
            throw new Error(`invalid TCP port in ${argv.transport}`);
          }
          await serveTcp(backend, port);
        } else {
          throw new Error(`unknown transport ${argv.transport}`);
        }
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      console.error(`error: ${err?.message ?? msg}`);
      process.exit(1);
    })
    .parseAsync();
}

main().catch((err) => {
  console.error(`error: ${(err as Error).message}`);
  process.exit(1);
});
