// The shared flat-JSON benchmark config (same keys and defaults as the
// primary component's schema).

export interface BenchConfig {
  runId: string;
  strategy: string;
  activation: "relu" | "sigmoid";
  loss: "mse" | "bce";
  layerWidths: number[];
  learningRate: number;
  seed: bigint;
  dataSeed: bigint;
  nSamples: number;
  epochs: number;
  repeats: number;
  warmupRepeats: number;
  batchSize: number | null;
  threads: number | null;
}

export class ConfigError extends Error {}

const KEYS = new Set([
  "run_id", "strategy", "activation", "loss", "layer_widths", "learning_rate",
  "seed", "data_seed", "n_samples", "epochs", "repeats", "warmup_repeats",
  "batch_size", "threads",
]);

const U64_MAX = (1n << 64n) - 1n;

function requireInt(key: string, value: unknown, minimum?: number): number {
  if (typeof value !== "number" || !Number.isInteger(value)) {
    throw new ConfigError(`${key}: expected an integer, got ${JSON.stringify(value)}`);
  }
  if (minimum !== undefined && value < minimum) {
    throw new ConfigError(`${key}: must be >= ${minimum}, got ${value}`);
  }
  return value;
}

function requireSeed(key: string, value: unknown): bigint {
  if (typeof value !== "number" || !Number.isInteger(value) || value < 0) {
    throw new ConfigError(`${key}: expected an unsigned integer, got ${JSON.stringify(value)}`);
  }
  const big = BigInt(value);
  if (big > U64_MAX) throw new ConfigError(`${key}: exceeds 64 bits`);
  return big;
}

export function parseConfig(raw: unknown): BenchConfig {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ConfigError("config: expected a JSON object");
  }
  const doc = raw as Record<string, unknown>;
  for (const key of Object.keys(doc)) {
    if (!KEYS.has(key)) throw new ConfigError(`${key}: unknown config key`);
  }
  const get = (key: string, fallback: unknown) => (doc[key] === undefined ? fallback : doc[key]);

  const runId = get("run_id", "run");
  if (typeof runId !== "string" || !/^[A-Za-z0-9_.\-]+$/.test(runId)) {
    throw new ConfigError(`run_id: only [A-Za-z0-9_.-] allowed, got ${JSON.stringify(runId)}`);
  }
  const activation = get("activation", "relu");
  if (activation !== "relu" && activation !== "sigmoid") {
    throw new ConfigError(`activation: unknown value ${JSON.stringify(activation)}`);
  }
  const loss = get("loss", "mse");
  if (loss !== "mse" && loss !== "bce") {
    throw new ConfigError(`loss: unknown value ${JSON.stringify(loss)}`);
  }
  const widthsRaw = get("layer_widths", [16, 32, 1]);
  if (!Array.isArray(widthsRaw) || widthsRaw.length < 2) {
    throw new ConfigError("layer_widths: need at least input and output widths");
  }
  const layerWidths = widthsRaw.map((w) => requireInt("layer_widths", w, 1));
  const learningRate = get("learning_rate", 0.05);
  if (typeof learningRate !== "number" || !(learningRate >= 0)) {
    throw new ConfigError(`learning_rate: must be >= 0, got ${JSON.stringify(learningRate)}`);
  }
  const strategy = get("strategy", "sequential_online");
  if (typeof strategy !== "string") throw new ConfigError("strategy: expected a string");

  const batchSizeRaw = get("batch_size", null);
  const threadsRaw = get("threads", null);
  return {
    runId,
    strategy,
    activation,
    loss,
    layerWidths,
    learningRate,
    seed: requireSeed("seed", get("seed", 1)),
    dataSeed: requireSeed("data_seed", get("data_seed", 100)),
    nSamples: requireInt("n_samples", get("n_samples", 256), 1),
    epochs: requireInt("epochs", get("epochs", 1000), 1),
    repeats: requireInt("repeats", get("repeats", 4), 1),
    warmupRepeats: requireInt("warmup_repeats", get("warmup_repeats", 1), 0),
    batchSize: batchSizeRaw === null ? null : requireInt("batch_size", batchSizeRaw, 1),
    threads: threadsRaw === null ? null : requireInt("threads", threadsRaw, 1),
  };
}
