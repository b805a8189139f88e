import { describe, expect, it } from "vitest";
import { parseConfig } from "../src/config";
import { makeDataset } from "../src/dataset";
import { DivergenceError, ParamsShapeError, runFrameworkBenchmark } from "../src/benchmark";
import { initParams } from "../src/params";
import { CSV_HEADER, emitCsv, parseCsv } from "../src/csv";

const TINY = {
  run_id: "t",
  n_samples: 8,
  layer_widths: [4, 6, 1],
  epochs: 2,
  repeats: 2,
  warmup_repeats: 1,
};

describe("dataset", () => {
  it("is deterministic and in range", () => {
    const a = makeDataset(16, [4, 6, 1], "relu", 42n);
    const b = makeDataset(16, [4, 6, 1], "relu", 42n);
    expect([...a.inputs]).toEqual([...b.inputs]);
    expect([...a.targets]).toEqual([...b.targets]);
    for (const x of a.inputs) {
      expect(x).toBeGreaterThanOrEqual(-1);
      expect(x).toBeLessThan(1);
    }
  });
});

describe("runFrameworkBenchmark", () => {
  it("emits four records per repeat with the phase-sum bound", () => {
    const result = runFrameworkBenchmark(parseConfig(TINY), null);
    expect(result.records.length).toBe(8);
    for (let repeat = 0; repeat < 2; repeat++) {
      const phases = new Map(
        result.records.filter((r) => r.repeat === repeat).map((r) => [r.phase, r.wallNs]),
      );
      const sum = phases.get("forward")! + phases.get("backward")! + phases.get("update")!;
      expect(sum <= phases.get("total")!).toBe(true);
    }
  });

  it("training reduces the loss", () => {
    const result = runFrameworkBenchmark(parseConfig({ ...TINY, epochs: 30 }), null);
    expect(result.finalLoss).toBeLessThan(result.initialLoss);
  });

  it("is loss-deterministic across runs", () => {
    const a = runFrameworkBenchmark(parseConfig(TINY), null);
    const b = runFrameworkBenchmark(parseConfig(TINY), null);
    expect(a.finalLoss).toBe(b.finalLoss);
    expect(a.initialLoss).toBe(b.initialLoss);
  });

  it("lr = 0 leaves the loss unchanged", () => {
    const result = runFrameworkBenchmark(parseConfig({ ...TINY, learning_rate: 0 }), null);
    expect(result.finalLoss).toBe(result.initialLoss);
  });

  it("diverges loudly, naming the epoch", () => {
    const config = parseConfig({ ...TINY, learning_rate: 1e9, epochs: 50 });
    expect(() => runFrameworkBenchmark(config, null)).toThrow(DivergenceError);
  });

  it("rejects mismatched imported params", () => {
    const config = parseConfig(TINY);
    expect(() => runFrameworkBenchmark(config, initParams([4, 5, 1], 1n))).toThrow(ParamsShapeError);
  });

  it("rejects bce configs", () => {
    expect(() => runFrameworkBenchmark(parseConfig({ ...TINY, loss: "bce" }), null)).toThrow(/mse only/);
  });
});

describe("csv", () => {
  it("uses the pinned header and full-batch row shape", () => {
    const config = parseConfig(TINY);
    const result = runFrameworkBenchmark(config, null);
    const csv = emitCsv(config, result.records);
    const lines = csv.split("\n");
    expect(lines[0]).toBe(CSV_HEADER);
    expect(lines[1].startsWith("t,batch_vectorized,relu,mse,8,,2,0,forward,")).toBe(true);
    expect(lines.filter((l) => l.length > 0).length).toBe(1 + 8);
    const runs = parseCsv(csv);
    expect(runs.length).toBe(1);
    expect(runs[0].wallNs.get("total")!.length).toBe(2);
  });
});
