// The benchmark network on top of convnetjs: construction, bit-exact weight
// injection/extraction, and dataset-level loss evaluation.
//
// Only the MSE head is supported: the library has no sigmoid-head
// cross-entropy loss, and the shared parity configuration uses MSE.

import { Net, Vol } from "convnetjs";
import { LayerParams } from "./params";
import { Dataset } from "./dataset";
import { ConfigError } from "./config";

export interface FrameworkNet {
  net: Net;
  widths: number[];
  inputVol: Vol;
}

export function buildNet(widths: number[], activation: "relu" | "sigmoid",
                         loss: "mse" | "bce"): FrameworkNet {
  if (loss !== "mse") {
    throw new ConfigError("loss: the framework baseline supports mse only (no sigmoid-head cross-entropy in the library)");
  }
  const defs: Array<Record<string, unknown>> = [
    { type: "input", out_sx: 1, out_sy: 1, out_depth: widths[0] },
  ];
  for (let l = 1; l < widths.length - 1; l++) {
    defs.push({ type: "fc", num_neurons: widths[l], activation });
  }
  defs.push({ type: "regression", num_neurons: widths[widths.length - 1] });
  const net = new Net();
  net.makeLayers(defs);
  return { net, widths: [...widths], inputVol: new Vol(1, 1, widths[0], 0.0) };
}

function fcLayers(net: Net) {
  return net.layers.filter((l) => l.layer_type === "fc");
}

/**
 * Write MLPW layer parameters into the framework net. Library fc filters
 * hold one incoming-weight vector per neuron, i.e. filters[j].w[d] is the
 * row-major weights[d * fanOut + j].
 */
export function setParams(fw: FrameworkNet, layers: LayerParams[]): void {
  const fcs = fcLayers(fw.net);
  if (fcs.length !== layers.length) {
    throw new ConfigError(`params: ${layers.length} layers do not fit a ${fcs.length}-layer network`);
  }
  for (let l = 0; l < layers.length; l++) {
    const { fanIn, fanOut, weights, biases } = layers[l];
    const fc = fcs[l];
    if (fc.num_inputs !== fanIn || fc.out_depth !== fanOut) {
      throw new ConfigError(
        `params: layer ${l} is ${fanIn}x${fanOut}, network expects ${fc.num_inputs}x${fc.out_depth}`,
      );
    }
    for (let j = 0; j < fanOut; j++) {
      const filter = fc.filters![j];
      for (let d = 0; d < fanIn; d++) {
        filter.w[d] = weights[d * fanOut + j];
      }
      filter.dw.fill(0);
      fc.biases!.w[j] = biases[j];
    }
    fc.biases!.dw.fill(0);
  }
}

export function getParams(fw: FrameworkNet): LayerParams[] {
  return fcLayers(fw.net).map((fc) => {
    const fanIn = fc.num_inputs!;
    const fanOut = fc.out_depth!;
    const weights = new Float64Array(fanIn * fanOut);
    const biases = new Float64Array(fanOut);
    for (let j = 0; j < fanOut; j++) {
      for (let d = 0; d < fanIn; d++) {
        weights[d * fanOut + j] = fc.filters![j].w[d];
      }
      biases[j] = fc.biases!.w[j];
    }
    return { fanIn, fanOut, weights, biases };
  });
}

export function forwardSample(fw: FrameworkNet, data: Dataset, i: number): Vol {
  fw.inputVol.w.set(data.inputs.subarray(i * data.inputDim, (i + 1) * data.inputDim));
  return fw.net.forward(fw.inputVol, false);
}

/** Half squared error of one prediction, the shared loss convention. */
export function sampleLoss(out: Vol, data: Dataset, i: number): number {
  let acc = 0.0;
  const base = i * data.outputDim;
  for (let k = 0; k < data.outputDim; k++) {
    const d = out.w[k] - data.targets[base + k];
    acc += 0.5 * d * d;
  }
  return acc;
}

/** Mean loss over the dataset at the current parameters (untimed paths). */
export function datasetLoss(fw: FrameworkNet, data: Dataset): number {
  let acc = 0.0;
  for (let i = 0; i < data.n; i++) {
    acc += sampleLoss(forwardSample(fw, data, i), data, i);
  }
  return acc / data.n;
}
