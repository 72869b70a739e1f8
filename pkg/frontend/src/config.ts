import { readFileSync } from "node:fs";
import { z } from "zod";
import { ConfigError } from "./errors.js";

/**
 * Encoder sizing. The default is the reference architecture used for the
 * digit experiment: two 5x5 conv blocks (32 then 64 filters, each followed
 * by 2x2 max-pooling), a 1024-wide dense layer with 0.4 dropout, and a
 * linear head emitting mean and log-variance per latent dimension. Tests
 * shrink these numbers; the layer sequence never changes.
 */
export const encoderSpecSchema = z.object({
  convFilters: z.array(z.number().int().positive()).min(1).default([32, 64]),
  kernelSize: z.number().int().positive().default(5),
  poolSize: z.number().int().positive().default(2),
  denseUnits: z.number().int().positive().default(1024),
  dropout: z.number().min(0).max(1).default(0.4),
});

/** Decoder sizing: one hidden dense layer, then a 10-way classifier head. */
export const decoderSpecSchema = z.object({
  denseUnits: z.number().int().positive().default(100),
});

const mnistSourceSchema = z.object({
  kind: z.literal("mnist"),
  cacheDir: z.string().default("data/mnist"),
  allowDownload: z.boolean().default(true),
});

const syntheticSourceSchema = z.object({
  kind: z.literal("synthetic"),
  trainCount: z.number().int().positive().default(256),
  testCount: z.number().int().positive().default(128),
  imageSize: z.number().int().min(4).default(12),
  numClasses: z.number().int().min(2).max(10).default(4),
});

export const dataSourceSchema = z.discriminatedUnion("kind", [
  mnistSourceSchema,
  syntheticSourceSchema,
]);

export type DataSource = z.infer<typeof dataSourceSchema>;

export const trainerConfigSchema = z
  .object({
    stages: z.number().int().min(1).max(2).default(1),
    /** Per-stage weight on the classification term; length must equal stages. */
    beta: z.array(z.number().nonnegative()).optional(),
    /** Per-stage latent widths; length must equal stages. */
    latentDims: z.array(z.number().int().positive()).optional(),
    /** Fraction of training images that get pixel noise added. */
    alpha: z.number().min(0).max(1).default(0),
    noiseStd: z.number().positive().default(0.3),
    batchSize: z.number().int().positive().default(100),
    /** Latent samples per input when estimating the classification terms. */
    samplesPerInput: z.number().int().positive().default(1),
    epochs: z.number().int().positive().default(50),
    learningRate: z.number().positive().default(1e-4),
    seed: z.number().int().nonnegative().optional(),
    outDir: z.string().default("runs/out"),
    data: dataSourceSchema.prefault({ kind: "mnist" }),
    encoder: encoderSpecSchema.prefault({}),
    decoder: decoderSpecSchema.prefault({}),
  })
  .strict();

export type EncoderSpec = z.infer<typeof encoderSpecSchema>;
export type DecoderSpec = z.infer<typeof decoderSpecSchema>;

export interface TrainerConfig extends z.infer<typeof trainerConfigSchema> {
  beta: number[];
  latentDims: number[];
  seed: number;
}

/** Total latent width 20 regardless of stage count keeps runs comparable. */
const DEFAULT_TOTAL_LATENT = 20;

/**
 * Seed precedence: explicit config value, then the SIB_SEED environment
 * variable shared with the companion region CLI, then 0.
 */
export function defaultSeed(env: NodeJS.ProcessEnv = process.env): number {
  const raw = env.SIB_SEED;
  if (raw === undefined || raw === "") {
    return 0;
  }
  const n = Number(raw);
  if (!Number.isInteger(n) || n < 0) {
    throw new ConfigError(`SIB_SEED must be a nonnegative integer, got ${JSON.stringify(raw)}`);
  }
  return n;
}

/** Validate a raw config object, filling defaults and derived fields. */
export function resolveConfig(
  raw: unknown,
  env: NodeJS.ProcessEnv = process.env,
): TrainerConfig {
  const parsed = trainerConfigSchema.safeParse(raw);
  if (!parsed.success) {
    const msg = parsed.error.issues
      .map((i) => `${i.path.join(".") || "(root)"}: ${i.message}`)
      .join("; ");
    throw new ConfigError(msg);
  }
  const cfg = parsed.data;

  const latentDims =
    cfg.latentDims ??
    Array(cfg.stages).fill(DEFAULT_TOTAL_LATENT / cfg.stages);
  if (latentDims.length !== cfg.stages) {
    throw new ConfigError(
      `latentDims has ${latentDims.length} entries for ${cfg.stages} stage(s)`,
    );
  }
  const beta = cfg.beta ?? Array(cfg.stages).fill(1);
  if (beta.length !== cfg.stages) {
    throw new ConfigError(`beta has ${beta.length} entries for ${cfg.stages} stage(s)`);
  }

  const seed = cfg.seed ?? defaultSeed(env);
  return { ...cfg, latentDims, beta, seed };
}

/** Read and resolve a JSON config file. */
export function loadConfigFile(
  path: string,
  env: NodeJS.ProcessEnv = process.env,
): TrainerConfig {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (e) {
    throw new ConfigError(`cannot read config ${path}: ${(e as Error).message}`);
  }
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new ConfigError(`config ${path} is not valid JSON: ${(e as Error).message}`);
  }
  return resolveConfig(raw, env);
}

/** Sum of per-stage latent widths; equal across runs being compared. */
export function totalLatent(cfg: TrainerConfig): number {
  return cfg.latentDims.reduce((a, b) => a + b, 0);
}
