// The framework benchmark run: plain full-batch gradient descent with the
// same timing protocol as the primary component. Phase counters wrap every
// forward call, every backward call and the per-epoch parameter update;
// loss probes and setup stay in Total only, so forward+backward+update
// <= total on every record.
//
// The update is the library Trainer's sgd branch (momentum 0, no decay):
// p -= learning_rate * accumulated_gradient / batch_size, applied at the
// full-batch boundary. It is inlined here because Trainer.train() fuses
// forward/backward/update and would defeat phase-resolved timing.

import { BenchConfig } from "./config";
import { Dataset, makeDataset } from "./dataset";
import { LayerParams, initParams, shapesMatch } from "./params";
import { ConfigError } from "./config";
import {
  FrameworkNet,
  buildNet,
  datasetLoss,
  forwardSample,
  sampleLoss,
  setParams,
} from "./network";

export type Phase = "forward" | "backward" | "update" | "total";

export interface TimingRecord {
  runId: string;
  repeat: number;
  phase: Phase;
  wallNs: bigint;
}

export interface BenchResult {
  config: BenchConfig;
  records: TimingRecord[];
  initialLoss: number;
  finalLoss: number;
}

export class DivergenceError extends Error {
  constructor(public epoch: number) {
    super(`non-finite training loss at epoch ${epoch}`);
  }
}

export class ParamsShapeError extends Error {}

function trainOnce(fw: FrameworkNet, data: Dataset, init: LayerParams[], config: BenchConfig) {
  setParams(fw, init);
  let forwardNs = 0n;
  let backwardNs = 0n;
  let updateNs = 0n;
  const lr = config.learningRate;
  const paramsAndGrads = fw.net.getParamsAndGrads();
  const target = new Array<number>(data.outputDim);
  for (let epoch = 0; epoch < config.epochs; epoch++) {
    let lossAcc = 0.0;
    for (let i = 0; i < data.n; i++) {
      let t0 = process.hrtime.bigint();
      const out = forwardSample(fw, data, i);
      forwardNs += process.hrtime.bigint() - t0;
      lossAcc += sampleLoss(out, data, i);
      for (let k = 0; k < data.outputDim; k++) {
        target[k] = data.targets[i * data.outputDim + k];
      }
      t0 = process.hrtime.bigint();
      fw.net.backward(target);
      backwardNs += process.hrtime.bigint() - t0;
    }
    const t0 = process.hrtime.bigint();
    for (const pg of paramsAndGrads) {
      const p = pg.params;
      const g = pg.grads;
      for (let j = 0; j < p.length; j++) {
        p[j] -= (lr * g[j]) / data.n;
        g[j] = 0;
      }
    }
    updateNs += process.hrtime.bigint() - t0;
    const epochLoss = lossAcc / data.n;
    if (!Number.isFinite(epochLoss)) {
      throw new DivergenceError(epoch);
    }
  }
  return { forwardNs, backwardNs, updateNs };
}

export function runFrameworkBenchmark(config: BenchConfig,
                                      importedParams: LayerParams[] | null): BenchResult {
  if (config.loss !== "mse") {
    throw new ConfigError("loss: the framework baseline supports mse only");
  }
  if (importedParams !== null && !shapesMatch(importedParams, config.layerWidths)) {
    const got = importedParams.map((l) => `${l.fanIn}x${l.fanOut}`).join(",");
    throw new ParamsShapeError(
      `params shape [${got}] does not match layer_widths [${config.layerWidths.join(",")}]`,
    );
  }
  const data = makeDataset(config.nSamples, config.layerWidths, config.activation, config.dataSeed);
  const fw = buildNet(config.layerWidths, config.activation, config.loss);
  const init = importedParams ?? initParams(config.layerWidths, config.seed);

  for (let w = 0; w < config.warmupRepeats; w++) {
    trainOnce(fw, data, init, config);
  }
  const records: TimingRecord[] = [];
  for (let repeat = 0; repeat < config.repeats; repeat++) {
    const t0 = process.hrtime.bigint();
    const spans = trainOnce(fw, data, init, config);
    const totalNs = process.hrtime.bigint() - t0;
    records.push(
      { runId: config.runId, repeat, phase: "forward", wallNs: spans.forwardNs },
      { runId: config.runId, repeat, phase: "backward", wallNs: spans.backwardNs },
      { runId: config.runId, repeat, phase: "update", wallNs: spans.updateNs },
      { runId: config.runId, repeat, phase: "total", wallNs: totalNs },
    );
  }
  const finalLoss = datasetLoss(fw, data);
  setParams(fw, init);
  const initialLoss = datasetLoss(fw, data);
  return { config, records, initialLoss, finalLoss };
}
