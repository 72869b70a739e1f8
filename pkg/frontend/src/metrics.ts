import { ConfigError } from "./errors.js";

/** One row per (epoch, stage): accuracies plus the epoch's mean loss terms. */
export interface EpochMetrics {
  epoch: number;
  stage: number;
  cleanAcc: number;
  noisyAcc: number;
  klTerm: number;
  ceTerms: number[];
}

export function metricsHeader(stages: number): string {
  const ce = Array.from({ length: stages }, (_, t) => `ce_term_${t + 1}`);
  return ["epoch", "stage", "clean_acc", "noisy_acc", "kl_term", ...ce].join(",");
}

function fmt(v: number): string {
  if (!Number.isFinite(v)) {
    return v.toString();
  }
  // shortest round-trip decimal; stable across runs for identical floats
  return String(v);
}

export function metricsToCsv(rows: EpochMetrics[], stages: number): string {
  const lines = [metricsHeader(stages)];
  for (const r of rows) {
    if (r.ceTerms.length !== stages) {
      throw new RangeError(`row has ${r.ceTerms.length} ce terms, expected ${stages}`);
    }
    if (r.cleanAcc < 0 || r.cleanAcc > 100 || r.noisyAcc < 0 || r.noisyAcc > 100) {
      throw new RangeError(`accuracy out of [0, 100] at epoch ${r.epoch} stage ${r.stage}`);
    }
    lines.push(
      [
        r.epoch,
        r.stage,
        fmt(r.cleanAcc),
        fmt(r.noisyAcc),
        fmt(r.klTerm),
        ...r.ceTerms.map(fmt),
      ].join(","),
    );
  }
  return lines.join("\n") + "\n";
}

/** Parse a metrics CSV produced by metricsToCsv (used by the compare tool). */
export function parseMetricsCsv(text: string): { stages: number; rows: EpochMetrics[] } {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new ConfigError("metrics file is empty");
  }
  const header = lines[0].split(",");
  const fixed = ["epoch", "stage", "clean_acc", "noisy_acc", "kl_term"];
  for (let i = 0; i < fixed.length; i++) {
    if (header[i] !== fixed[i]) {
      throw new ConfigError(`unexpected metrics header: ${lines[0]}`);
    }
  }
  const stages = header.length - fixed.length;
  if (stages < 1 || !header.slice(fixed.length).every((h, t) => h === `ce_term_${t + 1}`)) {
    throw new ConfigError(`unexpected metrics header: ${lines[0]}`);
  }
  const rows: EpochMetrics[] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",").map(Number);
    if (cells.length !== header.length || cells.some((c) => Number.isNaN(c))) {
      throw new ConfigError(`bad metrics row: ${line}`);
    }
    rows.push({
      epoch: cells[0],
      stage: cells[1],
      cleanAcc: cells[2],
      noisyAcc: cells[3],
      klTerm: cells[4],
      ceTerms: cells.slice(5),
    });
  }
  return { stages, rows };
}
