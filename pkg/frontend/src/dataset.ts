// Synthetic teacher-labeled dataset, regenerated from the documented
// SplitMix64 procedure so both components train on identical data: inputs
// uniform in [-1, 1) drawn sample-major from SplitMix64(data_seed), targets
// from a teacher network initialized with seed data_seed + 1.

import { SplitMix64, wrapU64 } from "./splitmix";
import { LayerParams, initParams } from "./params";

export interface Dataset {
  n: number;
  inputDim: number;
  outputDim: number;
  /** Row-major n x inputDim. */
  inputs: Float64Array;
  /** Row-major n x outputDim. */
  targets: Float64Array;
}

/** Plain forward pass used only for teacher labeling (linear output head). */
export function teacherForward(layers: LayerParams[], x: Float64Array,
                               activation: "relu" | "sigmoid"): Float64Array {
  let current = x;
  for (let l = 0; l < layers.length; l++) {
    const { fanIn, fanOut, weights, biases } = layers[l];
    const next = new Float64Array(fanOut);
    for (let j = 0; j < fanOut; j++) {
      let acc = 0.0;
      for (let d = 0; d < fanIn; d++) {
        acc += current[d] * weights[d * fanOut + j];
      }
      acc += biases[j];
      if (l + 1 < layers.length) {
        next[j] = activation === "relu" ? Math.max(0, acc) : 1.0 / (1.0 + Math.exp(-acc));
      } else {
        next[j] = acc;
      }
    }
    current = next;
  }
  return current;
}

export function makeDataset(n: number, widths: number[], activation: "relu" | "sigmoid",
                            dataSeed: bigint): Dataset {
  const inputDim = widths[0];
  const outputDim = widths[widths.length - 1];
  const gen = new SplitMix64(dataSeed);
  const inputs = new Float64Array(n * inputDim);
  for (let i = 0; i < inputs.length; i++) {
    inputs[i] = 2.0 * gen.nextFloat() - 1.0;
  }
  const teacher = initParams(widths, wrapU64(dataSeed + 1n));
  const targets = new Float64Array(n * outputDim);
  for (let i = 0; i < n; i++) {
    const out = teacherForward(teacher, inputs.subarray(i * inputDim, (i + 1) * inputDim), activation);
    targets.set(out, i * outputDim);
  }
  return { n, inputDim, outputDim, inputs, targets };
}
