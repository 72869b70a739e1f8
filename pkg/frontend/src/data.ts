import { createHash } from "node:crypto";
import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { gunzipSync } from "node:zlib";
import { DataUnavailable } from "./errors.js";
import { deriveSeed, Rng } from "./rng.js";
import type { DataSource } from "./config.js";

/** Flat image set; pixels row-major in [0, 1]. */
export interface Dataset {
  images: Float32Array;
  labels: Uint8Array;
  count: number;
  imageSize: number;
}

export interface LoadedData {
  train: Dataset;
  testClean: Dataset;
  testNoisy: Dataset;
  /** How many training images actually carry added noise. */
  contaminatedCount: number;
}

const MNIST_FILES = [
  { name: "train-images-idx3-ubyte.gz", md5: "f68b3c2dcbeaaa9fbdd348bbdeb94873" },
  { name: "train-labels-idx1-ubyte.gz", md5: "d53e105ee54ea40749a09fcbcd1e9432" },
  { name: "t10k-images-idx3-ubyte.gz", md5: "9fb629c4189551a2d022fa330f9573f3" },
  { name: "t10k-labels-idx1-ubyte.gz", md5: "ec29112dd5afa0611ce80d1b7f02629c" },
] as const;

const MNIST_MIRRORS = [
  "https://ossci-datasets.s3.amazonaws.com/mnist/",
  "https://storage.googleapis.com/cvdf-datasets/mnist/",
];

const TRAIN_COUNT = 50000;

function md5hex(buf: Uint8Array): string {
  return createHash("md5").update(buf).digest("hex");
}

async function fetchFile(name: string, md5: string): Promise<Uint8Array> {
  const errors: string[] = [];
  for (const base of MNIST_MIRRORS) {
    try {
      const res = await fetch(base + name);
      if (!res.ok) {
        errors.push(`${base}${name}: HTTP ${res.status}`);
        continue;
      }
      const buf = new Uint8Array(await res.arrayBuffer());
      const got = md5hex(buf);
      if (got !== md5) {
        errors.push(`${base}${name}: checksum ${got}, want ${md5}`);
        continue;
      }
      return buf;
    } catch (e) {
      errors.push(`${base}${name}: ${(e as Error).message}`);
    }
  }
  throw new DataUnavailable(`could not fetch ${name}: ${errors.join("; ")}`);
}

async function ensureFile(
  cacheDir: string,
  name: string,
  md5: string,
  allowDownload: boolean,
): Promise<Uint8Array> {
  const path = join(cacheDir, name);
  if (existsSync(path)) {
    return readFileSync(path);
  }
  if (!allowDownload) {
    throw new DataUnavailable(`${path} is missing and downloads are disabled`);
  }
  const buf = await fetchFile(name, md5);
  mkdirSync(cacheDir, { recursive: true });
  writeFileSync(path, buf);
  return buf;
}

interface IdxImages {
  pixels: Uint8Array;
  count: number;
  rows: number;
  cols: number;
}

function parseIdxImages(gz: Uint8Array, name: string): IdxImages {
  let raw: Buffer;
  try {
    raw = gunzipSync(gz);
  } catch (e) {
    throw new DataUnavailable(`${name}: not a gzip file (${(e as Error).message})`);
  }
  const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
  if (raw.length < 16 || view.getUint32(0) !== 0x00000803) {
    throw new DataUnavailable(`${name}: bad image-file magic`);
  }
  const count = view.getUint32(4);
  const rows = view.getUint32(8);
  const cols = view.getUint32(12);
  if (raw.length !== 16 + count * rows * cols) {
    throw new DataUnavailable(`${name}: truncated image data`);
  }
  return { pixels: new Uint8Array(raw.buffer, raw.byteOffset + 16, count * rows * cols), count, rows, cols };
}

function parseIdxLabels(gz: Uint8Array, name: string, expectCount: number): Uint8Array {
  let raw: Buffer;
  try {
    raw = gunzipSync(gz);
  } catch (e) {
    throw new DataUnavailable(`${name}: not a gzip file (${(e as Error).message})`);
  }
  const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
  if (raw.length < 8 || view.getUint32(0) !== 0x00000801) {
    throw new DataUnavailable(`${name}: bad label-file magic`);
  }
  const count = view.getUint32(4);
  if (count !== expectCount) {
    throw new DataUnavailable(`${name}: ${count} labels for ${expectCount} images`);
  }
  if (raw.length !== 8 + count) {
    throw new DataUnavailable(`${name}: truncated label data`);
  }
  return new Uint8Array(raw.buffer, raw.byteOffset + 8, count);
}

function toFloat(pixels: Uint8Array, count: number, imageSize: number): Dataset {
  const images = new Float32Array(pixels.length);
  for (let i = 0; i < pixels.length; i++) {
    images[i] = pixels[i] / 255;
  }
  return { images, labels: new Uint8Array(count), count, imageSize };
}

/**
 * Add zero-mean Gaussian pixel noise to a fraction alpha of the images,
 * clipping back to [0, 1]. Exactly round(alpha * count) images are
 * modified, chosen by a seeded shuffle; alpha = 0 leaves an untouched
 * copy. Returns the new dataset plus the sorted modified indices.
 */
export function contaminate(
  data: Dataset,
  alpha: number,
  sigma: number,
  seed: number,
): { data: Dataset; modified: Int32Array } {
  if (alpha < 0 || alpha > 1) {
    throw new RangeError(`alpha must be in [0, 1], got ${alpha}`);
  }
  const images = data.images.slice();
  const k = Math.round(alpha * data.count);
  const order = new Int32Array(data.count);
  for (let i = 0; i < data.count; i++) {
    order[i] = i;
  }
  new Rng(deriveSeed(seed, "contaminate-pick")).shuffle(order);
  const picked = order.slice(0, k).sort();
  const noise = new Rng(deriveSeed(seed, "contaminate-noise"));
  const dim = data.imageSize * data.imageSize;
  for (const idx of picked) {
    const base = idx * dim;
    for (let p = 0; p < dim; p++) {
      const v = images[base + p] + sigma * noise.normal();
      images[base + p] = v < 0 ? 0 : v > 1 ? 1 : v;
    }
  }
  return {
    data: { images, labels: data.labels.slice(), count: data.count, imageSize: data.imageSize },
    modified: picked,
  };
}

/** Noise every image (the fully-noisy test condition). */
export function noiseAll(data: Dataset, sigma: number, seed: number): Dataset {
  const { data: out } = contaminate(data, 1, sigma, seed);
  return out;
}

/**
 * Synthetic stand-in for the digit data: each class is a bright square at
 * a class-specific position on a ring, over a dim jittered background.
 * Learnable by a small conv net in a few epochs, which keeps the training
 * tests hermetic and fast.
 */
export function makeSynthetic(
  count: number,
  imageSize: number,
  numClasses: number,
  seed: number,
): Dataset {
  const dim = imageSize * imageSize;
  const images = new Float32Array(count * dim);
  const labels = new Uint8Array(count);
  const rng = new Rng(deriveSeed(seed, "synthetic"));
  const half = imageSize / 2;
  const ring = imageSize / 4;
  const side = Math.max(2, Math.floor(imageSize / 4));
  for (let i = 0; i < count; i++) {
    const cls = i % numClasses;
    labels[i] = cls;
    const angle = (2 * Math.PI * cls) / numClasses;
    const cx = Math.round(half + ring * Math.cos(angle) - side / 2);
    const cy = Math.round(half + ring * Math.sin(angle) - side / 2);
    const base = i * dim;
    for (let p = 0; p < dim; p++) {
      images[base + p] = 0.1 + 0.05 * rng.uniform();
    }
    for (let dy = 0; dy < side; dy++) {
      for (let dx = 0; dx < side; dx++) {
        const x = Math.min(imageSize - 1, Math.max(0, cx + dx));
        const y = Math.min(imageSize - 1, Math.max(0, cy + dy));
        images[base + y * imageSize + x] = 0.9;
      }
    }
  }
  return { images, labels, count, imageSize };
}

async function loadMnist(cacheDir: string, allowDownload: boolean): Promise<{
  train: Dataset;
  test: Dataset;
}> {
  const [trainImgsGz, trainLabelsGz, testImgsGz, testLabelsGz] = await Promise.all(
    MNIST_FILES.map((f) => ensureFile(cacheDir, f.name, f.md5, allowDownload)),
  );
  const trainRaw = parseIdxImages(trainImgsGz, MNIST_FILES[0].name);
  const testRaw = parseIdxImages(testImgsGz, MNIST_FILES[2].name);
  if (trainRaw.rows !== trainRaw.cols || testRaw.rows !== trainRaw.rows) {
    throw new DataUnavailable("unexpected image geometry");
  }
  const trainLabels = parseIdxLabels(trainLabelsGz, MNIST_FILES[1].name, trainRaw.count);
  const testLabels = parseIdxLabels(testLabelsGz, MNIST_FILES[3].name, testRaw.count);
  if (trainRaw.count < TRAIN_COUNT) {
    throw new DataUnavailable(`train split has ${trainRaw.count} images, need ${TRAIN_COUNT}`);
  }
  const dim = trainRaw.rows * trainRaw.cols;
  const train = toFloat(trainRaw.pixels.subarray(0, TRAIN_COUNT * dim), TRAIN_COUNT, trainRaw.rows);
  train.labels = trainLabels.slice(0, TRAIN_COUNT);
  const test = toFloat(testRaw.pixels, testRaw.count, testRaw.rows);
  test.labels = testLabels.slice();
  return { train, test };
}

/**
 * Assemble train / clean-test / noisy-test splits for a data source. The
 * training split has a fraction alpha of images contaminated at noiseStd;
 * the noisy test split is fully contaminated at the same level.
 */
export async function loadData(
  source: DataSource,
  alpha: number,
  noiseStd: number,
  seed: number,
): Promise<LoadedData> {
  let train: Dataset;
  let test: Dataset;
  if (source.kind === "mnist") {
    ({ train, test } = await loadMnist(source.cacheDir, source.allowDownload));
  } else {
    train = makeSynthetic(
      source.trainCount,
      source.imageSize,
      source.numClasses,
      deriveSeed(seed, "train-data"),
    );
    test = makeSynthetic(
      source.testCount,
      source.imageSize,
      source.numClasses,
      deriveSeed(seed, "test-data"),
    );
  }
  const { data: trainNoisy, modified } = contaminate(train, alpha, noiseStd, deriveSeed(seed, "train-noise"));
  const testNoisy = noiseAll(test, noiseStd, deriveSeed(seed, "test-noise"));
  return {
    train: trainNoisy,
    testClean: test,
    testNoisy,
    contaminatedCount: modified.length,
  };
}
