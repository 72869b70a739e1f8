import * as tf from "@tensorflow/tfjs";
import { deriveSeed, Rng } from "./rng.js";
import { applyEncoder, type StageModels } from "./model.js";

/**
 * Training objective: KL between the final stage's Gaussian posterior and
 * a standard-normal prior, plus per-stage classification terms weighted by
 * beta and averaged over M reparameterized latent samples per input. Only
 * the last stage pays the rate penalty; earlier stages enter through their
 * classifiers, which read a prefix of the latents. All terms are in
 * natural-log units.
 */

export interface StageStats {
  mu: tf.Tensor2D;
  logvar: tf.Tensor2D;
}

export interface LossTensors {
  total: tf.Scalar;
  kl: tf.Scalar;
  ce: tf.Scalar[];
}

export interface LossBreakdown {
  total: number;
  kl: number;
  ce: number[];
}

/** Per stage: flat [M * batch * latentDim] standard-normal draws. */
export function drawNoise(
  seed: number,
  samplesPerInput: number,
  batch: number,
  latentDims: number[],
): Float32Array[] {
  return latentDims.map((dim, t) =>
    new Rng(deriveSeed(seed, "latent-noise", t)).normals(samplesPerInput * batch * dim),
  );
}

export function noiseTensors(
  noise: Float32Array[],
  samplesPerInput: number,
  batch: number,
  latentDims: number[],
): tf.Tensor3D[] {
  return noise.map((flat, t) => tf.tensor3d(flat, [samplesPerInput, batch, latentDims[t]]));
}

/** Batch-mean KL(N(mu, diag e^logvar) || N(0, I)), in nats. */
export function klDiagGaussian(mu: tf.Tensor2D, logvar: tf.Tensor2D): tf.Scalar {
  return tf.tidy(() => {
    const perSample = tf
      .addN([mu.square(), logvar.exp(), logvar.neg()])
      .sub(tf.scalar(1))
      .sum(1)
      .mul(tf.scalar(0.5));
    return perSample.mean() as tf.Scalar;
  });
}

function crossEntropyFromLogits(logits: tf.Tensor2D, labels: tf.Tensor1D, numClasses: number): tf.Scalar {
  const logProbs = tf.logSoftmax(logits);
  const oneHot = tf.oneHot(labels, numClasses).asType("float32");
  return logProbs.mul(oneHot).sum(1).neg().mean() as tf.Scalar;
}

/**
 * Evaluate the objective from already-computed encoder statistics. The
 * noise tensors fix the reparameterization draws, which makes the loss a
 * deterministic differentiable function of mu and logvar; gradient and
 * variance checks rely on that.
 */
export function lossFromStats(
  stats: StageStats[],
  labels: tf.Tensor1D,
  decoders: tf.Sequential[],
  beta: number[],
  noise: tf.Tensor3D[],
  numClasses: number,
): LossTensors {
  // tidy only handles tensor containers, so the terms travel as an array
  const out = tf.tidy(() => {
    const stages = stats.length;
    const [m, batch] = [noise[0].shape[0], noise[0].shape[1]];
    const latents: tf.Tensor3D[] = stats.map((s, t) => {
      const std = s.logvar.mul(tf.scalar(0.5)).exp();
      return s.mu.expandDims(0).add(std.expandDims(0).mul(noise[t])) as tf.Tensor3D;
    });
    const tiledLabels = tf.tile(labels.expandDims(0), [m, 1]).reshape([m * batch]) as tf.Tensor1D;
    const ce: tf.Scalar[] = [];
    for (let t = 0; t < stages; t++) {
      const prefix = tf.concat(latents.slice(0, t + 1), 2);
      const flat = prefix.reshape([m * batch, prefix.shape[2] as number]) as tf.Tensor2D;
      const logits = decoders[t].apply(flat) as tf.Tensor2D;
      ce.push(crossEntropyFromLogits(logits, tiledLabels, numClasses));
    }
    const kl = klDiagGaussian(stats[stages - 1].mu, stats[stages - 1].logvar);
    let total: tf.Tensor = kl;
    for (let t = 0; t < stages; t++) {
      total = total.add(ce[t].mul(tf.scalar(beta[t])));
    }
    return [total as tf.Scalar, kl, ...ce];
  });
  return {
    total: out[0] as tf.Scalar,
    kl: out[1] as tf.Scalar,
    ce: out.slice(2) as tf.Scalar[],
  };
}

/** Split an encoder's [batch, 2L] output into mean and log-variance. */
export function splitStats(out: tf.Tensor2D, latentDim: number): StageStats {
  return {
    mu: out.slice([0, 0], [-1, latentDim]) as tf.Tensor2D,
    logvar: out.slice([0, latentDim], [-1, latentDim]) as tf.Tensor2D,
  };
}

/**
 * Full objective for a batch of images: run every stage encoder, sample
 * latents, score every stage classifier. Returns the term breakdown as
 * live tensors so callers can differentiate through them; evaluation-only
 * callers should wrap the call in tf.tidy.
 */
export function empiricalLoss(
  images: tf.Tensor4D,
  labels: tf.Tensor1D,
  models: StageModels,
  beta: number[],
  noise: tf.Tensor3D[],
  opts: { training?: boolean; maskSeed?: number } = {},
): LossTensors {
  const training = opts.training ?? false;
  const maskSeed = opts.maskSeed ?? 0;
  const flat = tf.tidy(() => {
    const parts: tf.Tensor2D[] = [];
    models.encoders.forEach((enc, t) => {
      const out = applyEncoder(enc, images, training, deriveSeed(maskSeed, "mask", t));
      const s = splitStats(out, models.latentDims[t]);
      parts.push(s.mu, s.logvar);
    });
    return parts;
  });
  const stats: StageStats[] = models.encoders.map((_, t) => ({
    mu: flat[2 * t],
    logvar: flat[2 * t + 1],
  }));
  const result = lossFromStats(stats, labels, models.decoders, beta, noise, models.numClasses);
  return result;
}

export function readBreakdown(tensors: LossTensors): LossBreakdown {
  return {
    total: tensors.total.dataSync()[0],
    kl: tensors.kl.dataSync()[0],
    ce: tensors.ce.map((t) => t.dataSync()[0]),
  };
}

/* ------------------------------------------------------------------ */
/* Float64 reference implementation.                                   */
/*                                                                     */
/* Mirrors lossFromStats in plain arrays so tests can take central     */
/* differences without float32 forward-evaluation noise, and so the    */
/* graph above is checked against independently written arithmetic.    */
/* ------------------------------------------------------------------ */

export interface RefDenseLayer {
  kernel: number[][]; // [inputDim][units]
  bias: number[];
  relu: boolean;
}

export interface RefStage {
  mu: number[][]; // [batch][latentDim]
  logvar: number[][];
}

/** Export a classifier head's weights for the reference evaluator. */
export function exportDecoder(m: tf.Sequential): RefDenseLayer[] {
  const weights = m.getWeights();
  const layers: RefDenseLayer[] = [];
  for (let i = 0; i < weights.length; i += 2) {
    const kernel = weights[i];
    const bias = weights[i + 1];
    const [inputDim, units] = kernel.shape as [number, number];
    const kdata = kernel.dataSync();
    const rows: number[][] = [];
    for (let r = 0; r < inputDim; r++) {
      rows.push(Array.from(kdata.slice(r * units, (r + 1) * units)));
    }
    layers.push({
      kernel: rows,
      bias: Array.from(bias.dataSync()),
      relu: i + 2 < weights.length,
    });
  }
  return layers;
}

function refForward(layers: RefDenseLayer[], input: number[]): number[] {
  let x = input;
  for (const layer of layers) {
    const units = layer.bias.length;
    const out = layer.bias.slice();
    for (let r = 0; r < x.length; r++) {
      const v = x[r];
      if (v === 0) continue;
      const row = layer.kernel[r];
      for (let c = 0; c < units; c++) {
        out[c] += v * row[c];
      }
    }
    if (layer.relu) {
      for (let c = 0; c < units; c++) {
        if (out[c] < 0) out[c] = 0;
      }
    }
    x = out;
  }
  return x;
}

function refCrossEntropy(logits: number[], label: number): number {
  let max = -Infinity;
  for (const v of logits) max = Math.max(max, v);
  let sum = 0;
  for (const v of logits) sum += Math.exp(v - max);
  return Math.log(sum) + max - logits[label];
}

/**
 * Reference objective. noise[t][j][i] is the length-L_t draw for sample j
 * of input i; shapes must agree with the stats.
 */
export function refLoss(
  stats: RefStage[],
  labels: number[],
  decoders: RefDenseLayer[][],
  beta: number[],
  noise: number[][][][],
): LossBreakdown {
  const stages = stats.length;
  const batch = labels.length;
  const m = noise[0].length;
  const last = stats[stages - 1];
  let kl = 0;
  for (let i = 0; i < batch; i++) {
    for (let d = 0; d < last.mu[i].length; d++) {
      const mu = last.mu[i][d];
      const lv = last.logvar[i][d];
      kl += 0.5 * (mu * mu + Math.exp(lv) - 1 - lv);
    }
  }
  kl /= batch;

  const ce: number[] = [];
  for (let t = 0; t < stages; t++) {
    let acc = 0;
    for (let j = 0; j < m; j++) {
      for (let i = 0; i < batch; i++) {
        const parts: number[] = [];
        for (let s = 0; s <= t; s++) {
          const muRow = stats[s].mu[i];
          const lvRow = stats[s].logvar[i];
          for (let d = 0; d < muRow.length; d++) {
            parts.push(muRow[d] + Math.exp(0.5 * lvRow[d]) * noise[s][j][i][d]);
          }
        }
        acc += refCrossEntropy(refForward(decoders[t], parts), labels[i]);
      }
    }
    ce.push(acc / (m * batch));
  }

  let total = kl;
  for (let t = 0; t < stages; t++) {
    total += beta[t] * ce[t];
  }
  return { total, kl, ce };
}
