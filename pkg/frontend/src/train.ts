import * as tf from "@tensorflow/tfjs";
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import type { TrainerConfig } from "./config.js";
import { totalLatent } from "./config.js";
import { loadData, type Dataset, type LoadedData } from "./data.js";
import { NonFiniteLoss } from "./errors.js";
import { drawNoise, empiricalLoss, noiseTensors, readBreakdown, splitStats } from "./loss.js";
import { applyEncoder, buildModels, saveCheckpoint, trainableVariables, type StageModels } from "./model.js";
import { metricsToCsv, type EpochMetrics } from "./metrics.js";
import { deriveSeed, Rng } from "./rng.js";

export interface TrainResult {
  config: TrainerConfig;
  metrics: EpochMetrics[];
  contaminatedCount: number;
  csvPath: string;
  metaPath: string;
  checkpointDir: string;
}

function batchTensors(
  ds: Dataset,
  indices: ArrayLike<number>,
): { images: tf.Tensor4D; labels: tf.Tensor1D } {
  const dim = ds.imageSize * ds.imageSize;
  const n = indices.length;
  const flat = new Float32Array(n * dim);
  const labels = new Int32Array(n);
  for (let i = 0; i < n; i++) {
    const idx = indices[i];
    flat.set(ds.images.subarray(idx * dim, (idx + 1) * dim), i * dim);
    labels[i] = ds.labels[idx];
  }
  return {
    images: tf.tensor4d(flat, [n, ds.imageSize, ds.imageSize, 1]),
    labels: tf.tensor1d(labels, "int32"),
  };
}

/**
 * Stage-t classification accuracy (percent) using the posterior means as
 * latents; no sampling and no dropout at evaluation time.
 */
export function evaluateAccuracy(
  models: StageModels,
  stage: number,
  ds: Dataset,
  evalBatch = 500,
): number {
  let correct = 0;
  for (let start = 0; start < ds.count; start += evalBatch) {
    const n = Math.min(evalBatch, ds.count - start);
    const indices = Array.from({ length: n }, (_, i) => start + i);
    const { images, labels } = batchTensors(ds, indices);
    const pred = tf.tidy(() => {
      const mus: tf.Tensor2D[] = [];
      for (let t = 0; t <= stage; t++) {
        const out = applyEncoder(models.encoders[t], images, false);
        mus.push(splitStats(out, models.latentDims[t]).mu);
      }
      const logits = models.decoders[stage].apply(tf.concat(mus, 1)) as tf.Tensor2D;
      return logits.argMax(1) as tf.Tensor1D;
    });
    const predData = pred.dataSync();
    const labelData = labels.dataSync();
    for (let i = 0; i < n; i++) {
      if (predData[i] === labelData[i]) correct++;
    }
    images.dispose();
    labels.dispose();
    pred.dispose();
  }
  return (100 * correct) / ds.count;
}

function writeMetadata(
  path: string,
  cfg: TrainerConfig,
  data: LoadedData,
  extra: Record<string, unknown>,
): void {
  const meta = {
    config: cfg,
    totalLatent: totalLatent(cfg),
    trainCount: data.train.count,
    testCount: data.testClean.count,
    contaminatedCount: data.contaminatedCount,
    imageSize: data.train.imageSize,
    backend: tf.getBackend(),
    nodeVersion: process.version,
    ...extra,
  };
  writeFileSync(path, JSON.stringify(meta, null, 2) + "\n");
}

/**
 * Minibatch training of all stage encoders and classifiers on the joint
 * objective. Per epoch: seeded reshuffle, fixed-size minibatches (the
 * ragged tail is dropped to keep tensor shapes static), one optimizer
 * step per batch, then accuracy on the clean and noisy test splits for
 * every stage. Metrics, run metadata, and a weight checkpoint land in
 * cfg.outDir.
 */
export async function train(cfg: TrainerConfig): Promise<TrainResult> {
  const data = await loadData(cfg.data, cfg.alpha, cfg.noiseStd, cfg.seed);
  return trainOnData(cfg, data);
}

/** Training core with the splits already assembled; train() feeds it. */
export async function trainOnData(cfg: TrainerConfig, data: LoadedData): Promise<TrainResult> {
  const startedAt = new Date();
  const numClasses = cfg.data.kind === "synthetic" ? cfg.data.numClasses : 10;
  const models = buildModels(cfg, data.train.imageSize, numClasses);
  const vars = trainableVariables(models);
  const optimizer = tf.train.adam(cfg.learningRate);

  const order = new Int32Array(data.train.count);
  for (let i = 0; i < order.length; i++) {
    order[i] = i;
  }
  const stepsPerEpoch = Math.floor(data.train.count / cfg.batchSize);
  if (stepsPerEpoch === 0) {
    throw new RangeError(
      `batchSize ${cfg.batchSize} exceeds training set size ${data.train.count}`,
    );
  }

  const metrics: EpochMetrics[] = [];
  for (let epoch = 1; epoch <= cfg.epochs; epoch++) {
    new Rng(deriveSeed(cfg.seed, "order", epoch)).shuffle(order);
    let klSum = 0;
    const ceSums = new Array<number>(cfg.stages).fill(0);
    for (let step = 0; step < stepsPerEpoch; step++) {
      const indices = order.subarray(step * cfg.batchSize, (step + 1) * cfg.batchSize);
      const { images, labels } = batchTensors(data.train, indices);
      const stepSeed = deriveSeed(cfg.seed, "step", epoch * 1_000_000 + step);
      const noise = noiseTensors(
        drawNoise(stepSeed, cfg.samplesPerInput, cfg.batchSize, cfg.latentDims),
        cfg.samplesPerInput,
        cfg.batchSize,
        cfg.latentDims,
      );
      let breakdown = { total: NaN, kl: NaN, ce: [] as number[] };
      const { value, grads } = tf.variableGrads(() => {
        const terms = empiricalLoss(images, labels, models, cfg.beta, noise, {
          training: true,
          maskSeed: deriveSeed(stepSeed, "dropout"),
        });
        breakdown = readBreakdown(terms);
        return terms.total;
      }, vars);
      if (!Number.isFinite(breakdown.total)) {
        throw new NonFiniteLoss(epoch, step, {
          total: breakdown.total,
          kl: breakdown.kl,
          ...Object.fromEntries(breakdown.ce.map((v, t) => [`ce_${t + 1}`, v])),
        });
      }
      optimizer.applyGradients(
        Object.entries(grads).map(([name, tensor]) => ({ name, tensor })),
      );
      value.dispose();
      Object.values(grads).forEach((g) => g.dispose());
      images.dispose();
      labels.dispose();
      noise.forEach((n) => n.dispose());
      klSum += breakdown.kl;
      breakdown.ce.forEach((v, t) => {
        ceSums[t] += v;
      });
    }
    const klTerm = klSum / stepsPerEpoch;
    const ceTerms = ceSums.map((s) => s / stepsPerEpoch);
    for (let t = 0; t < cfg.stages; t++) {
      metrics.push({
        epoch,
        stage: t + 1,
        cleanAcc: evaluateAccuracy(models, t, data.testClean),
        noisyAcc: evaluateAccuracy(models, t, data.testNoisy),
        klTerm,
        ceTerms,
      });
    }
  }

  mkdirSync(cfg.outDir, { recursive: true });
  const csvPath = join(cfg.outDir, "metrics.csv");
  writeFileSync(csvPath, metricsToCsv(metrics, cfg.stages));
  const metaPath = join(cfg.outDir, "meta.json");
  const checkpointDir = join(cfg.outDir, "checkpoint");
  saveCheckpoint(models, checkpointDir);
  writeMetadata(metaPath, cfg, data, {
    startedAt: startedAt.toISOString(),
    finishedAt: new Date().toISOString(),
    stepsPerEpoch,
  });
  optimizer.dispose();
  return {
    config: cfg,
    metrics,
    contaminatedCount: data.contaminatedCount,
    csvPath,
    metaPath,
    checkpointDir,
  };
}
