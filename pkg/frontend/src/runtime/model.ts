// Bundle loader and graph executor. A bundle directory holds model.json
// (op graph + weight manifest), group*.bin float32 shards, preprocess.json,
// and card.json; this module consumes them through a caller-supplied file
// reader so the same code runs in the extension (fetch) and in tests (fs).

import {
  addTensors,
  conv2d,
  ConvParams,
  dense,
  depthwiseConv2d,
  globalMaxPool,
  maxPool2d,
  softmax,
} from "./ops.js";
import { Tensor3 } from "./tensor.js";

interface WeightEntry {
  name: string;
  shape: number[];
  dtype: string;
  byte_offset: number;
  byte_length: number;
}

interface ShardManifest {
  path: string;
  tensors: WeightEntry[];
}

export interface ModelJson {
  format: string;
  version: number;
  family: string;
  input: { layout: string; channels: number; min_dim: number };
  output: { name: string; classes: string[] };
  ops: OpJson[];
  weights_manifest: ShardManifest[];
}

export interface OpJson {
  name: string;
  type: string;
  input?: string;
  inputs?: string[];
  weights?: string;
  bias?: string;
  stride?: number[];
  padding?: number[];
  size?: number[];
  groups?: number;
  activation?: string | null;
}

export interface PreprocessJson {
  desktop_scale: number;
  mobile_scale: number;
  min_dim: number;
  rounding: string;
  resample: string;
  normalize: { mean: number[]; std: number[] };
}

export interface CardJson {
  family: string;
  run_id: string;
  metrics: Record<string, number>;
  alert_threshold: number;
  classes: string[];
}

export interface BundleFiles {
  model: ModelJson;
  preprocess: PreprocessJson;
  card: CardJson;
  shards: Map<string, ArrayBuffer>;
}

export type FileReader = (name: string) => Promise<ArrayBuffer>;

export async function loadBundle(read: FileReader): Promise<BundleFiles> {
  const decode = (buf: ArrayBuffer) => JSON.parse(new TextDecoder().decode(buf));
  const model: ModelJson = decode(await read("model.json"));
  if (model.format !== "seshield.webbundle") {
    throw new Error(`unexpected bundle format: ${model.format}`);
  }
  const preprocess: PreprocessJson = decode(await read("preprocess.json"));
  const card: CardJson = decode(await read("card.json"));
  const shards = new Map<string, ArrayBuffer>();
  for (const shard of model.weights_manifest) {
    shards.set(shard.path, await read(shard.path));
  }
  return { model, preprocess, card, shards };
}

interface PackedConv {
  kind: "conv" | "depthwise";
  params: ConvParams;
  weights: Float32Array;
  bias: Float32Array;
  activation: string | null;
  input: string;
  name: string;
}

type PackedOp =
  | PackedConv
  | { kind: "maxpool"; name: string; input: string; size: number[]; stride: number[]; padding: number[] }
  | { kind: "add"; name: string; inputs: string[] }
  | { kind: "gmp"; name: string; input: string }
  | { kind: "dense"; name: string; input: string; weights: Float32Array; bias: Float32Array; outDim: number }
  | { kind: "softmax"; name: string; input: string };

export class BundleModel {
  readonly card: CardJson;
  readonly preprocess: PreprocessJson;
  readonly outputName: string;
  private ops: PackedOp[] = [];

  constructor(files: BundleFiles) {
    this.card = files.card;
    this.preprocess = files.preprocess;
    this.outputName = files.model.output.name;
    const raw = new Map<string, { shape: number[]; data: Float32Array }>();
    for (const shard of files.model.weights_manifest) {
      const buf = files.shards.get(shard.path);
      if (!buf) throw new Error(`missing weight shard ${shard.path}`);
      for (const entry of shard.tensors) {
        raw.set(entry.name, {
          shape: entry.shape,
          data: new Float32Array(buf, entry.byte_offset, entry.byte_length / 4),
        });
      }
    }
    for (const op of files.model.ops) this.ops.push(this.pack(op, raw));
  }

  private pack(op: OpJson, raw: Map<string, { shape: number[]; data: Float32Array }>): PackedOp {
    if (op.type === "conv2d") {
      const w = raw.get(op.weights!)!;
      const b = raw.get(op.bias!)!;
      const [cout, cinG, kh, kw] = w.shape;
      const params: ConvParams = {
        strideH: op.stride![0], strideW: op.stride![1],
        padH: op.padding![0], padW: op.padding![1],
        kh, kw, cout, groups: op.groups ?? 1,
      };
      const activation = op.activation ?? null;
      if (params.groups > 1 && cinG === 1) {
        // depthwise: repack [c, 1, kh, kw] -> [kh*kw, c]
        const packed = new Float32Array(kh * kw * cout);
        for (let c = 0; c < cout; c++) {
          for (let t = 0; t < kh * kw; t++) {
            packed[t * cout + c] = w.data[c * kh * kw + t];
          }
        }
        return { kind: "depthwise", params, weights: packed, bias: b.data,
                 activation, input: op.input!, name: op.name };
      }
      if (params.groups !== 1) {
        throw new Error(`grouped convolution not supported (groups=${params.groups})`);
      }
      // dense conv: repack [cout, cin, kh, kw] -> [(dy, dx, cin), cout]
      const cin = cinG;
      const packed = new Float32Array(kh * kw * cin * cout);
      for (let co = 0; co < cout; co++) {
        for (let ci = 0; ci < cin; ci++) {
          for (let t = 0; t < kh * kw; t++) {
            packed[(t * cin + ci) * cout + co] = w.data[(co * cin + ci) * kh * kw + t];
          }
        }
      }
      return { kind: "conv", params, weights: packed, bias: b.data,
               activation, input: op.input!, name: op.name };
    }
    if (op.type === "maxpool2d") {
      return { kind: "maxpool", name: op.name, input: op.input!,
               size: op.size!, stride: op.stride!, padding: op.padding! };
    }
    if (op.type === "add") return { kind: "add", name: op.name, inputs: op.inputs! };
    if (op.type === "global_max_pool") {
      return { kind: "gmp", name: op.name, input: op.input! };
    }
    if (op.type === "dense") {
      const w = raw.get(op.weights!)!;
      return { kind: "dense", name: op.name, input: op.input!,
               weights: w.data, bias: raw.get(op.bias!)!.data, outDim: w.shape[0] };
    }
    if (op.type === "softmax") return { kind: "softmax", name: op.name, input: op.input! };
    throw new Error(`unknown op type ${op.type}`);
  }

  /** Run the graph on a preprocessed NHWC tensor; returns class probabilities. */
  run(input: Tensor3): Float32Array {
    const tensors = new Map<string, Tensor3>();
    const vectors = new Map<string, Float32Array>();
    tensors.set("input", input);
    for (const op of this.ops) {
      if (op.kind === "conv") {
        tensors.set(op.name, conv2d(tensors.get(op.input)!, op.weights, op.bias,
                                    op.params, op.activation));
      } else if (op.kind === "depthwise") {
        tensors.set(op.name, depthwiseConv2d(tensors.get(op.input)!, op.weights,
                                             op.bias, op.params, op.activation));
      } else if (op.kind === "maxpool") {
        tensors.set(op.name, maxPool2d(tensors.get(op.input)!, op.size[0], op.size[1],
                                       op.stride[0], op.stride[1],
                                       op.padding[0], op.padding[1]));
      } else if (op.kind === "add") {
        tensors.set(op.name, addTensors(tensors.get(op.inputs[0])!,
                                        tensors.get(op.inputs[1])!));
      } else if (op.kind === "gmp") {
        vectors.set(op.name, globalMaxPool(tensors.get(op.input)!));
      } else if (op.kind === "dense") {
        vectors.set(op.name, dense(vectors.get(op.input)!, op.weights, op.bias,
                                   op.outDim));
      } else {
        vectors.set(op.name, softmax(vectors.get(op.input)!));
      }
    }
    return vectors.get(this.outputName)!;
  }
}
