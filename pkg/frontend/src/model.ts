import * as tf from "@tensorflow/tfjs";
import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import type { DecoderSpec, EncoderSpec, TrainerConfig } from "./config.js";
import { deriveSeed, Rng } from "./rng.js";

/**
 * A stage encoder is a conv trunk plus a linear head emitting mean and
 * log-variance. Dropout between them is applied functionally with an
 * in-package RNG: a layer-held seed would replay one mask forever, while
 * the trainer needs masks that are fresh per step yet reproducible.
 */
export interface Encoder {
  trunk: tf.Sequential;
  head: tf.Sequential;
  dropout: number;
  latentDim: number;
}

/**
 * One stochastic encoder per stage plus one classifier head per stage.
 * The stage-t classifier reads the concatenation of latents 1..t, so the
 * final stage sees the full latent budget while earlier stages see a
 * prefix of it.
 */
export interface StageModels {
  encoders: Encoder[];
  decoders: tf.Sequential[];
  latentDims: number[];
  imageSize: number;
  numClasses: number;
}

function glorot(seed: number) {
  return tf.initializers.glorotUniform({ seed });
}

/** Conv tower for one stage. Layer sequence is fixed; widths come from the config. */
export function buildEncoder(
  imageSize: number,
  latentDim: number,
  spec: EncoderSpec,
  seed: number,
): Encoder {
  const trunk = tf.sequential();
  let first = true;
  spec.convFilters.forEach((filters, i) => {
    trunk.add(
      tf.layers.conv2d({
        ...(first ? { inputShape: [imageSize, imageSize, 1] } : {}),
        filters,
        kernelSize: spec.kernelSize,
        padding: "same",
        activation: "relu",
        kernelInitializer: glorot(deriveSeed(seed, "conv", i)),
      }),
    );
    trunk.add(tf.layers.maxPooling2d({ poolSize: spec.poolSize, strides: spec.poolSize }));
    first = false;
  });
  trunk.add(tf.layers.flatten());
  trunk.add(
    tf.layers.dense({
      units: spec.denseUnits,
      activation: "relu",
      kernelInitializer: glorot(deriveSeed(seed, "dense")),
    }),
  );
  const head = tf.sequential();
  head.add(
    tf.layers.dense({
      inputShape: [spec.denseUnits],
      units: 2 * latentDim,
      kernelInitializer: glorot(deriveSeed(seed, "head")),
    }),
  );
  return { trunk, head, dropout: spec.dropout, latentDim };
}

/**
 * Run an encoder. During training a dropout mask seeded by maskSeed is
 * applied between trunk and head; evaluation skips it.
 */
export function applyEncoder(
  enc: Encoder,
  images: tf.Tensor4D,
  training: boolean,
  maskSeed = 0,
): tf.Tensor2D {
  return tf.tidy(() => {
    let h = enc.trunk.apply(images, { training }) as tf.Tensor2D;
    if (training && enc.dropout > 0) {
      const [batch, units] = h.shape;
      const rng = new Rng(maskSeed);
      const keep = 1 - enc.dropout;
      const mask = new Float32Array(batch * units);
      for (let i = 0; i < mask.length; i++) {
        mask[i] = rng.uniform() < keep ? 1 / keep : 0;
      }
      h = h.mul(tf.tensor2d(mask, [batch, units]));
    }
    return enc.head.apply(h) as tf.Tensor2D;
  });
}

/** Classifier head over a latent vector; emits logits, not probabilities. */
export function buildDecoder(
  inputDim: number,
  numClasses: number,
  spec: DecoderSpec,
  seed: number,
): tf.Sequential {
  const m = tf.sequential();
  m.add(
    tf.layers.dense({
      inputShape: [inputDim],
      units: spec.denseUnits,
      activation: "relu",
      kernelInitializer: glorot(deriveSeed(seed, "dense")),
    }),
  );
  m.add(
    tf.layers.dense({
      units: numClasses,
      kernelInitializer: glorot(deriveSeed(seed, "head")),
    }),
  );
  return m;
}

export function buildModels(
  cfg: TrainerConfig,
  imageSize: number,
  numClasses: number,
): StageModels {
  const encoders: Encoder[] = [];
  const decoders: tf.Sequential[] = [];
  let prefix = 0;
  for (let t = 0; t < cfg.stages; t++) {
    encoders.push(
      buildEncoder(imageSize, cfg.latentDims[t], cfg.encoder, deriveSeed(cfg.seed, "encoder", t)),
    );
    prefix += cfg.latentDims[t];
    decoders.push(
      buildDecoder(prefix, numClasses, cfg.decoder, deriveSeed(cfg.seed, "decoder", t)),
    );
  }
  return { encoders, decoders, latentDims: cfg.latentDims.slice(), imageSize, numClasses };
}

/** All trainable variables across every stage, for the optimizer. */
export function trainableVariables(models: StageModels): tf.Variable[] {
  const vars: tf.Variable[] = [];
  const parts: tf.Sequential[] = [];
  for (const e of models.encoders) {
    parts.push(e.trunk, e.head);
  }
  parts.push(...models.decoders);
  for (const m of parts) {
    for (const w of m.trainableWeights) {
      // the backing tf.Variable is compile-time protected but is the only
      // handle the optimizer can update in place
      vars.push((w as unknown as { val: tf.Variable }).val);
    }
  }
  return vars;
}

interface WeightEntry {
  model: string;
  index: number;
  shape: number[];
  offset: number;
  length: number;
}

function modelList(models: StageModels): Array<[string, tf.Sequential]> {
  const out: Array<[string, tf.Sequential]> = [];
  models.encoders.forEach((e, t) => {
    out.push([`encoder_${t + 1}_trunk`, e.trunk]);
    out.push([`encoder_${t + 1}_head`, e.head]);
  });
  models.decoders.forEach((m, t) => out.push([`decoder_${t + 1}`, m]));
  return out;
}

/**
 * Write weights as a raw float32 blob plus a JSON manifest. Avoids any
 * dependency on backend-specific save handlers.
 */
export function saveCheckpoint(models: StageModels, dir: string): void {
  mkdirSync(dir, { recursive: true });
  const entries: WeightEntry[] = [];
  const chunks: Float32Array[] = [];
  let offset = 0;
  for (const [name, m] of modelList(models)) {
    m.getWeights().forEach((w, index) => {
      const data = w.dataSync() as Float32Array;
      entries.push({ model: name, index, shape: w.shape.slice(), offset, length: data.length });
      chunks.push(Float32Array.from(data));
      offset += data.length;
    });
  }
  const blob = new Float32Array(offset);
  let pos = 0;
  for (const c of chunks) {
    blob.set(c, pos);
    pos += c.length;
  }
  writeFileSync(join(dir, "weights.bin"), Buffer.from(blob.buffer));
  writeFileSync(join(dir, "weights.json"), JSON.stringify({ entries }, null, 2));
}

/** Restore weights saved by saveCheckpoint into structurally equal models. */
export function loadCheckpoint(models: StageModels, dir: string): void {
  const manifest = JSON.parse(readFileSync(join(dir, "weights.json"), "utf8")) as {
    entries: WeightEntry[];
  };
  const raw = readFileSync(join(dir, "weights.bin"));
  const blob = new Float32Array(raw.buffer, raw.byteOffset, raw.byteLength / 4);
  const byModel = new Map<string, WeightEntry[]>();
  for (const e of manifest.entries) {
    const list = byModel.get(e.model) ?? [];
    list.push(e);
    byModel.set(e.model, list);
  }
  for (const [name, m] of modelList(models)) {
    const entries = (byModel.get(name) ?? []).sort((a, b) => a.index - b.index);
    const tensors = entries.map((e) =>
      tf.tensor(blob.slice(e.offset, e.offset + e.length), e.shape),
    );
    m.setWeights(tensors);
    tensors.forEach((t) => t.dispose());
  }
}
