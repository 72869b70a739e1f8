import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";
import { compareMetricsFiles, formatReport } from "../src/compare.js";
import { ConfigError } from "../src/errors.js";
import { metricsToCsv, type EpochMetrics } from "../src/metrics.js";

const tmpDirs: string[] = [];

afterAll(() => {
  for (const dir of tmpDirs) {
    rmSync(dir, { recursive: true, force: true });
  }
});

interface Point {
  clean: number;
  noisy: number;
}

/**
 * Write a run directory holding a metrics CSV and, unless latentTotal is
 * null, a sidecar metadata file. Non-final stages get deliberately poor
 * constant accuracies so a comparison that read the wrong stage would
 * show up immediately.
 */
function writeRun(
  stages: number,
  epochs: number,
  finalStage: (epoch: number) => Point,
  latentTotal: number | null = 20,
): string {
  const dir = mkdtempSync(join(tmpdir(), "vib-compare-"));
  tmpDirs.push(dir);
  const rows: EpochMetrics[] = [];
  for (let e = 1; e <= epochs; e++) {
    for (let t = 1; t <= stages; t++) {
      const p = t === stages ? finalStage(e) : { clean: 30, noisy: 10 };
      rows.push({
        epoch: e,
        stage: t,
        cleanAcc: p.clean,
        noisyAcc: p.noisy,
        klTerm: 1.5,
        ceTerms: new Array(stages).fill(0.2),
      });
    }
  }
  writeFileSync(join(dir, "metrics.csv"), metricsToCsv(rows, stages));
  if (latentTotal !== null) {
    writeFileSync(join(dir, "meta.json"), JSON.stringify({ totalLatent: latentTotal }) + "\n");
  }
  return join(dir, "metrics.csv");
}

// baseline that overfits: clean climbs, noisy collapses after epoch 8
const collapsing = (e: number): Point => ({
  clean: Math.min(99.5, 80 + e),
  noisy: e <= 8 ? 70 : Math.max(35, 70 - 5 * (e - 8)),
});

// refined run that holds its noisy accuracy
const holding = (e: number): Point => ({
  clean: Math.min(99.5, 78 + e),
  noisy: 88 - 0.2 * e,
});

describe("run comparison", () => {
  it("passes when the baseline collapses and the refined run holds", () => {
    const base = writeRun(1, 20, collapsing);
    const refi = writeRun(2, 20, holding);
    const report = compareMetricsFiles(base, refi);
    expect(report.pass).toBe(true);
    expect(report.reasons).toEqual([]);
    expect(report.epochsCompared).toBe(20);
    expect(report.noisyDipEpoch).toBe(11);
    expect(report.refinedWins).toBe(10);
    expect(report.postWarmupEpochs).toBe(10);
    expect(report.latentTotals).toEqual({ baseline: 20, refined: 20 });
    expect(formatReport(report)).toContain("PASS");
  });

  it("fails when the baseline never dips on the noisy test", () => {
    const base = writeRun(1, 20, (e) => ({ clean: 90 + e / 10, noisy: 75 }));
    const refi = writeRun(2, 20, holding);
    const report = compareMetricsFiles(base, refi);
    expect(report.pass).toBe(false);
    expect(report.noisyDipEpoch).toBeNull();
    expect(report.reasons.join(" ")).toContain("never fell below");
    expect(formatReport(report)).toContain("FAIL");
  });

  it("fails when the refined run loses the post-warmup majority", () => {
    const base = writeRun(1, 20, collapsing);
    const refi = writeRun(2, 20, (e) => ({ clean: 90, noisy: e <= 18 ? 20 : 90 }));
    const report = compareMetricsFiles(base, refi);
    expect(report.pass).toBe(false);
    expect(report.refinedWins).toBe(2);
    expect(report.reasons.join(" ")).toContain("won only 2/10");
  });

  it("enforces the clean floor only when asked", () => {
    const base = writeRun(1, 20, (e) => ({ clean: 95, noisy: collapsing(e).noisy }));
    const refi = writeRun(2, 20, holding);
    expect(compareMetricsFiles(base, refi).pass).toBe(true);
    const strict = compareMetricsFiles(base, refi, {
      warmup: 10,
      noisyCeiling: 60,
      cleanFloor: 99,
    });
    expect(strict.pass).toBe(false);
    expect(strict.reasons.join(" ")).toContain("below floor 99%");
  });

  it("flags mismatched latent budgets", () => {
    const base = writeRun(1, 20, collapsing, 20);
    const refi = writeRun(2, 20, holding, 12);
    const report = compareMetricsFiles(base, refi);
    expect(report.pass).toBe(false);
    expect(report.latentTotals).toEqual({ baseline: 20, refined: 12 });
    expect(report.reasons.join(" ")).toContain("not comparable");
  });

  it("tolerates absent metadata sidecars", () => {
    const base = writeRun(1, 20, collapsing, null);
    const refi = writeRun(2, 20, holding, null);
    const report = compareMetricsFiles(base, refi);
    expect(report.pass).toBe(true);
    expect(report.latentTotals).toBeNull();
  });

  it("refuses runs with no shared epochs", () => {
    const base = writeRun(1, 5, collapsing);
    const dir = mkdtempSync(join(tmpdir(), "vib-compare-"));
    tmpDirs.push(dir);
    const rows: EpochMetrics[] = [
      { epoch: 6, stage: 1, cleanAcc: 90, noisyAcc: 80, klTerm: 1, ceTerms: [0.1] },
    ];
    const other = join(dir, "metrics.csv");
    writeFileSync(other, metricsToCsv(rows, 1));
    expect(() => compareMetricsFiles(base, other)).toThrow(ConfigError);
  });
});
