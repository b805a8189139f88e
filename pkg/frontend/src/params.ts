// MLPW flat binary parameter format, shared with the primary component:
// little-endian; magic "MLPW"; u32 layer count; per layer u32 fan_in,
// u32 fan_out, fan_in*fan_out weight f64s (row-major), fan_out bias f64s.

import { SplitMix64 } from "./splitmix";

export interface LayerParams {
  fanIn: number;
  fanOut: number;
  /** Row-major fan_in x fan_out. */
  weights: Float64Array;
  biases: Float64Array;
}

export class ParamsFormatError extends Error {}

export function readParams(buf: Buffer): LayerParams[] {
  if (buf.length < 8 || buf.toString("latin1", 0, 4) !== "MLPW") {
    throw new ParamsFormatError("params file: bad magic (expected MLPW)");
  }
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  let off = 4;
  const layerCount = view.getUint32(off, true);
  off += 4;
  const layers: LayerParams[] = [];
  for (let l = 0; l < layerCount; l++) {
    if (off + 8 > buf.length) {
      throw new ParamsFormatError(`params file: truncated at layer ${l} header`);
    }
    const fanIn = view.getUint32(off, true);
    const fanOut = view.getUint32(off + 4, true);
    off += 8;
    const need = 8 * (fanIn * fanOut + fanOut);
    if (fanIn < 1 || fanOut < 1 || off + need > buf.length) {
      throw new ParamsFormatError(`params file: truncated or invalid layer ${l} (${fanIn}x${fanOut})`);
    }
    const weights = new Float64Array(fanIn * fanOut);
    for (let i = 0; i < weights.length; i++, off += 8) {
      weights[i] = view.getFloat64(off, true);
    }
    const biases = new Float64Array(fanOut);
    for (let i = 0; i < biases.length; i++, off += 8) {
      biases[i] = view.getFloat64(off, true);
    }
    layers.push({ fanIn, fanOut, weights, biases });
  }
  if (off !== buf.length) {
    throw new ParamsFormatError(`params file: ${buf.length - off} trailing bytes`);
  }
  return layers;
}

export function writeParams(layers: LayerParams[]): Buffer {
  let size = 8;
  for (const l of layers) size += 8 + 8 * (l.weights.length + l.biases.length);
  const buf = Buffer.alloc(size);
  buf.write("MLPW", 0, "latin1");
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  let off = 4;
  view.setUint32(off, layers.length, true);
  off += 4;
  for (const l of layers) {
    view.setUint32(off, l.fanIn, true);
    view.setUint32(off + 4, l.fanOut, true);
    off += 8;
    for (const v of l.weights) {
      view.setFloat64(off, v, true);
      off += 8;
    }
    for (const v of l.biases) {
      view.setFloat64(off, v, true);
      off += 8;
    }
  }
  return buf;
}

/**
 * The primary component's initialization: weights uniform in [-0.5, 0.5)
 * from SplitMix64(seed), drawn layer-major then row-major; biases zero.
 */
export function initParams(widths: number[], seed: bigint): LayerParams[] {
  const gen = new SplitMix64(seed);
  const layers: LayerParams[] = [];
  for (let l = 0; l + 1 < widths.length; l++) {
    const fanIn = widths[l];
    const fanOut = widths[l + 1];
    const weights = new Float64Array(fanIn * fanOut);
    for (let i = 0; i < weights.length; i++) {
      weights[i] = gen.nextFloat() - 0.5;
    }
    layers.push({ fanIn, fanOut, weights, biases: new Float64Array(fanOut) });
  }
  return layers;
}

export function shapesMatch(layers: LayerParams[], widths: number[]): boolean {
  if (layers.length !== widths.length - 1) return false;
  return layers.every((l, i) => l.fanIn === widths[i] && l.fanOut === widths[i + 1]);
}
