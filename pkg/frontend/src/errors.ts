/** Raised when the digit dataset is absent and cannot be fetched or decoded. */
export class DataUnavailable extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DataUnavailable";
  }
}

/** Raised when a training step produces a non-finite loss. */
export class NonFiniteLoss extends Error {
  readonly epoch: number;
  readonly step: number;
  readonly terms: Record<string, number>;

  constructor(epoch: number, step: number, terms: Record<string, number>) {
    const detail = Object.entries(terms)
      .map(([k, v]) => `${k}=${v}`)
      .join(" ");
    super(`non-finite loss at epoch ${epoch} step ${step}: ${detail}`);
    this.name = "NonFiniteLoss";
    this.epoch = epoch;
    this.step = step;
    this.terms = terms;
  }
}

/** Raised for invalid configuration values or files. */
export class ConfigError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConfigError";
  }
}
