declare module "convnetjs" {
  export class Vol {
    constructor(sx: number, sy: number, depth: number, c?: number);
    w: Float64Array;
    dw: Float64Array;
  }

  export interface ParamsAndGrads {
    params: Float64Array;
    grads: Float64Array;
    l2_decay_mul?: number;
    l1_decay_mul?: number;
  }

  export class Net {
    layers: Array<{
      layer_type: string;
      filters?: Vol[];
      biases?: Vol;
      num_inputs?: number;
      out_depth?: number;
    }>;
    makeLayers(defs: Array<Record<string, unknown>>): void;
    forward(v: Vol, isTraining?: boolean): Vol;
    backward(y: number[] | Float64Array): number;
    getParamsAndGrads(): ParamsAndGrads[];
  }
}
