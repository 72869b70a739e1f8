import { existsSync, readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { ConfigError } from "./errors.js";
import { parseMetricsCsv, type EpochMetrics } from "./metrics.js";

/**
 * Ordinal comparison of a baseline run against a refined (more-stage) run
 * on their metrics CSVs. The claims checked are qualitative: the baseline
 * overfits the clean data and collapses on the noisy test set, while the
 * refined run stays above it for most of the epochs past a warmup.
 */
export interface CompareOptions {
  /** Epochs at or below this are ignored for the win-share check. */
  warmup: number;
  /** Baseline noisy accuracy must dip below this at some epoch. */
  noisyCeiling: number;
  /** If set, baseline clean accuracy at the final epoch must reach this. */
  cleanFloor?: number;
}

export const DEFAULT_COMPARE: CompareOptions = { warmup: 10, noisyCeiling: 60 };

export interface CompareReport {
  epochsCompared: number;
  baselineMinNoisy: number;
  noisyDipEpoch: number | null;
  refinedWins: number;
  postWarmupEpochs: number;
  baselineCleanFinal: number;
  latentTotals: { baseline: number; refined: number } | null;
  pass: boolean;
  reasons: string[];
}

function finalStageByEpoch(data: { stages: number; rows: EpochMetrics[] }): Map<number, EpochMetrics> {
  const out = new Map<number, EpochMetrics>();
  for (const r of data.rows) {
    if (r.stage === data.stages) {
      out.set(r.epoch, r);
    }
  }
  return out;
}

function readLatentTotal(csvPath: string): number | null {
  const metaPath = join(dirname(csvPath), "meta.json");
  if (!existsSync(metaPath)) {
    return null;
  }
  try {
    const meta = JSON.parse(readFileSync(metaPath, "utf8")) as { totalLatent?: number };
    return typeof meta.totalLatent === "number" ? meta.totalLatent : null;
  } catch {
    return null;
  }
}

export function compareMetricsFiles(
  baselinePath: string,
  refinedPath: string,
  opts: CompareOptions = DEFAULT_COMPARE,
): CompareReport {
  const baseline = parseMetricsCsv(readFileSync(baselinePath, "utf8"));
  const refined = parseMetricsCsv(readFileSync(refinedPath, "utf8"));
  const base = finalStageByEpoch(baseline);
  const refi = finalStageByEpoch(refined);
  const epochs = [...base.keys()].filter((e) => refi.has(e)).sort((a, b) => a - b);
  if (epochs.length === 0) {
    throw new ConfigError("runs share no epochs; nothing to compare");
  }

  const reasons: string[] = [];
  let minNoisy = Infinity;
  let dipEpoch: number | null = null;
  for (const e of epochs) {
    const acc = base.get(e)!.noisyAcc;
    if (acc < minNoisy) {
      minNoisy = acc;
    }
    if (dipEpoch === null && acc < opts.noisyCeiling) {
      dipEpoch = e;
    }
  }
  if (dipEpoch === null) {
    reasons.push(
      `baseline noisy accuracy never fell below ${opts.noisyCeiling}% (min ${minNoisy.toFixed(2)}%)`,
    );
  }

  const post = epochs.filter((e) => e > opts.warmup);
  let wins = 0;
  for (const e of post) {
    if (refi.get(e)!.noisyAcc >= base.get(e)!.noisyAcc) {
      wins++;
    }
  }
  if (post.length === 0) {
    reasons.push(`no epochs past warmup ${opts.warmup}`);
  } else if (wins * 2 <= post.length) {
    reasons.push(
      `refined run won only ${wins}/${post.length} post-warmup epochs on the noisy test`,
    );
  }

  const lastEpoch = epochs[epochs.length - 1];
  const cleanFinal = base.get(lastEpoch)!.cleanAcc;
  if (opts.cleanFloor !== undefined && cleanFinal < opts.cleanFloor) {
    reasons.push(
      `baseline clean accuracy ${cleanFinal.toFixed(2)}% below floor ${opts.cleanFloor}%`,
    );
  }

  const latentBase = readLatentTotal(baselinePath);
  const latentRefi = readLatentTotal(refinedPath);
  let latentTotals: CompareReport["latentTotals"] = null;
  if (latentBase !== null && latentRefi !== null) {
    latentTotals = { baseline: latentBase, refined: latentRefi };
    if (latentBase !== latentRefi) {
      reasons.push(
        `latent budgets differ (${latentBase} vs ${latentRefi}); runs are not comparable`,
      );
    }
  }

  return {
    epochsCompared: epochs.length,
    baselineMinNoisy: minNoisy,
    noisyDipEpoch: dipEpoch,
    refinedWins: wins,
    postWarmupEpochs: post.length,
    baselineCleanFinal: cleanFinal,
    latentTotals,
    pass: reasons.length === 0,
    reasons,
  };
}

export function formatReport(r: CompareReport): string {
  const lines = [
    `epochs compared: ${r.epochsCompared}`,
    `baseline min noisy accuracy: ${r.baselineMinNoisy.toFixed(2)}%` +
      (r.noisyDipEpoch !== null ? ` (first dip at epoch ${r.noisyDipEpoch})` : ""),
    `refined wins on noisy test: ${r.refinedWins}/${r.postWarmupEpochs} post-warmup epochs`,
    `baseline final clean accuracy: ${r.baselineCleanFinal.toFixed(2)}%`,
  ];
  if (r.latentTotals) {
    lines.push(
      `latent budgets: baseline ${r.latentTotals.baseline}, refined ${r.latentTotals.refined}`,
    );
  }
  lines.push(r.pass ? "PASS" : `FAIL: ${r.reasons.join("; ")}`);
  return lines.join("\n");
}
