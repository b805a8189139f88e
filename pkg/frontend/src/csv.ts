// The pinned benchmark CSV schema, byte-compatible with the primary
// component's emitter.

import { BenchConfig } from "./config";
import { TimingRecord } from "./benchmark";

export const CSV_HEADER =
  "run_id,strategy,activation,loss,batch_size,threads,epochs,repeat,phase,wall_ns";

/**
 * Rows state the executed configuration: the framework path is plain
 * full-batch gradient descent, so strategy is batch_vectorized with
 * batch_size = n_samples regardless of the strategy the shared config
 * named for the primary component.
 */
export function emitCsv(config: BenchConfig, records: TimingRecord[]): string {
  const prefix =
    `${config.runId},batch_vectorized,${config.activation},${config.loss},` +
    `${config.nSamples},,${config.epochs}`;
  const lines = [CSV_HEADER];
  for (const r of records) {
    lines.push(`${prefix},${r.repeat},${r.phase},${r.wallNs}`);
  }
  return lines.join("\n") + "\n";
}

export interface CsvRun {
  runId: string;
  strategy: string;
  activation: string;
  loss: string;
  batchSize: number | null;
  threads: number | null;
  epochs: number;
  /** Per phase, per repeat wall times. */
  wallNs: Map<string, bigint[]>;
}

export function parseCsv(text: string): CsvRun[] {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0 || lines[0] !== CSV_HEADER) {
    throw new Error(`csv: expected header ${CSV_HEADER}`);
  }
  const runs = new Map<string, CsvRun>();
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== 10) throw new Error(`csv: expected 10 fields, got ${parts.length}`);
    const [runId, strategy, activation, loss, batchSize, threads, epochs, , phase, wallNs] = parts;
    let run = runs.get(runId);
    if (!run) {
      run = {
        runId,
        strategy,
        activation,
        loss,
        batchSize: batchSize === "" ? null : Number(batchSize),
        threads: threads === "" ? null : Number(threads),
        epochs: Number(epochs),
        wallNs: new Map(),
      };
      runs.set(runId, run);
    }
    const list = run.wallNs.get(phase) ?? [];
    list.push(BigInt(wallNs));
    run.wallNs.set(phase, list);
  }
  return [...runs.values()];
}
