export {
  dataSourceSchema,
  decoderSpecSchema,
  defaultSeed,
  encoderSpecSchema,
  loadConfigFile,
  resolveConfig,
  totalLatent,
  trainerConfigSchema,
} from "./config.js";
export type { DataSource, DecoderSpec, EncoderSpec, TrainerConfig } from "./config.js";
export { contaminate, loadData, makeSynthetic, noiseAll } from "./data.js";
export type { Dataset, LoadedData } from "./data.js";
export { ConfigError, DataUnavailable, NonFiniteLoss } from "./errors.js";
export {
  drawNoise,
  empiricalLoss,
  exportDecoder,
  klDiagGaussian,
  lossFromStats,
  noiseTensors,
  readBreakdown,
  refLoss,
  splitStats,
} from "./loss.js";
export type {
  LossBreakdown,
  LossTensors,
  RefDenseLayer,
  RefStage,
  StageStats,
} from "./loss.js";
export { metricsHeader, metricsToCsv, parseMetricsCsv } from "./metrics.js";
export type { EpochMetrics } from "./metrics.js";
export {
  applyEncoder,
  buildDecoder,
  buildEncoder,
  buildModels,
  loadCheckpoint,
  saveCheckpoint,
  trainableVariables,
} from "./model.js";
export type { Encoder, StageModels } from "./model.js";
export { deriveSeed, Rng } from "./rng.js";
export { evaluateAccuracy, train, trainOnData } from "./train.js";
export type { TrainResult } from "./train.js";
export { compareMetricsFiles, formatReport, DEFAULT_COMPARE } from "./compare.js";
export type { CompareOptions, CompareReport } from "./compare.js";
