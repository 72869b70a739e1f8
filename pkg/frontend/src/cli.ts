#!/usr/bin/env node
import { readFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { resolveConfig } from "./config.js";
import { compareMetricsFiles, DEFAULT_COMPARE, formatReport } from "./compare.js";
import { ConfigError, DataUnavailable, NonFiniteLoss } from "./errors.js";
import { train } from "./train.js";

/** Exit codes follow the companion CLI: 1 usage, 2 data, 4 check failure. */
async function cmdRun(args: {
  config?: string;
  stages?: number;
  alpha?: number;
  epochs?: number;
  seed?: number;
  out?: string;
}): Promise<number> {
  let raw: Record<string, unknown> = {};
  if (args.config) {
    let text: string;
    try {
      text = readFileSync(args.config, "utf8");
    } catch (e) {
      throw new ConfigError(`cannot read config ${args.config}: ${(e as Error).message}`);
    }
    raw = JSON.parse(text) as Record<string, unknown>;
  }
  if (args.stages !== undefined) raw.stages = args.stages;
  if (args.alpha !== undefined) raw.alpha = args.alpha;
  if (args.epochs !== undefined) raw.epochs = args.epochs;
  if (args.seed !== undefined) raw.seed = args.seed;
  if (args.out !== undefined) raw.outDir = args.out;
  const cfg = resolveConfig(raw);
  const result = await train(cfg);
  const last = result.metrics[result.metrics.length - 1];
  console.log(
    `trained ${cfg.stages} stage(s), ${cfg.epochs} epoch(s), seed ${cfg.seed}; ` +
      `final stage clean ${last.cleanAcc.toFixed(2)}% noisy ${last.noisyAcc.toFixed(2)}%`,
  );
  console.log(`metrics: ${result.csvPath}`);
  console.log(`metadata: ${result.metaPath}`);
  return 0;
}

function cmdCompare(args: {
  baseline: string;
  refined: string;
  warmup: number;
  noisyCeiling: number;
  cleanFloor?: number;
}): number {
  const report = compareMetricsFiles(args.baseline, args.refined, {
    warmup: args.warmup,
    noisyCeiling: args.noisyCeiling,
    cleanFloor: args.cleanFloor,
  });
  console.log(formatReport(report));
  return report.pass ? 0 : 4;
}

export async function main(argv: string[]): Promise<number> {
  let code = 0;
  const parser = yargs()
    .scriptName("vib-train")
    .command(
      "run",
      "train stage encoders and classifiers, writing metrics and a checkpoint",
      (y) =>
        y
          .option("config", { type: "string", describe: "JSON config file" })
          .option("stages", { type: "number" })
          .option("alpha", { type: "number", describe: "fraction of noisy training images" })
          .option("epochs", { type: "number" })
          .option("seed", { type: "number" })
          .option("out", { type: "string", describe: "output directory" }),
      async (args) => {
        code = await cmdRun(args);
      },
    )
    .command(
      "compare",
      "check a refined run against a baseline run's metrics",
      (y) =>
        y
          .option("baseline", { type: "string", demandOption: true })
          .option("refined", { type: "string", demandOption: true })
          .option("warmup", { type: "number", default: DEFAULT_COMPARE.warmup })
          .option("noisy-ceiling", { type: "number", default: DEFAULT_COMPARE.noisyCeiling })
          .option("clean-floor", { type: "number" }),
      (args) => {
        code = cmdCompare({
          baseline: args.baseline,
          refined: args.refined,
          warmup: args.warmup,
          noisyCeiling: args["noisy-ceiling"],
          cleanFloor: args["clean-floor"],
        });
      },
    )
    .demandCommand(1, "specify a command: run or compare")
    .strict()
    .fail((msg, err) => {
      throw err ?? new ConfigError(msg ?? "bad usage");
    });

  try {
    await parser.parse(hideBin(argv));
    return code;
  } catch (e) {
    if (e instanceof ConfigError || e instanceof SyntaxError) {
      console.error(`error: ${e.message}`);
      return 1;
    }
    if (e instanceof DataUnavailable) {
      console.error(`error: ${e.message}`);
      return 2;
    }
    if (e instanceof NonFiniteLoss) {
      console.error(`error: ${e.message}`);
      return 4;
    }
    throw e;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(process.argv)
    .then((code) => {
      process.exitCode = code;
    })
    .catch((e) => {
      console.error(e);
      process.exitCode = 70;
    });
}
