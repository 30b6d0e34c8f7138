/**
 * Small spatiotemporal regressor: a fixed spatial average-pool stem followed
 * by four conv stages (wide temporal kernels, temporal-preserving padding)
 * with spatial pooling, finishing in a per-frame linear head. Produces one
 * value per input frame.
 */

import {
  AvgPoolSpatial,
  Conv3d,
  Dropout,
  Layer,
  Param,
  Relu,
  Shape,
} from "./ops.js";
import { Rng, deriveSeed } from "./rng.js";

export interface ModelSpec {
  temporalKernelWidth: number;
  clipLen: number;
  inputSize: [number, number]; // (h, w)
  dropoutP: number;
  channels: [number, number, number, number];
  stemPool: number;
  seed: number;
}

export const DEFAULT_MODEL_SPEC: ModelSpec = {
  temporalKernelWidth: 9,
  clipLen: 135,
  inputSize: [64, 64],
  dropoutP: 0.75,
  channels: [4, 8, 12, 12],
  stemPool: 8,
  seed: 0,
};

export interface TrainSpec {
  lr: number;
  beta1: number;
  beta2: number;
  weightDecay: number;
  epochs: number;
  batchSize: number;
  seed: number;
  augment: boolean;
}

export const DEFAULT_TRAIN_SPEC: TrainSpec = {
  lr: 1e-4,
  beta1: 0.99,
  beta2: 0.999,
  weightDecay: 0.0,
  epochs: 200,
  batchSize: 1,
  seed: 0,
  augment: false,
};

export interface CaptureSlot {
  activation: Float32Array | null;
  gradient: Float32Array | null;
  shape: Shape | null;
}

export class Model {
  readonly spec: ModelSpec;
  readonly layers: Layer[] = [];
  readonly convs: Conv3d[] = [];
  /** conv stage name -> index of its post-activation layer output */
  readonly stageOutputs = new Map<string, number>();
  private adamStepCount = 0;

  constructor(spec: ModelSpec) {
    if (spec.temporalKernelWidth % 2 === 0) {
      throw new Error("temporal kernel width must be odd");
    }
    if (spec.clipLen < spec.temporalKernelWidth) {
      throw new Error("clip length must be >= temporal kernel width");
    }
    this.spec = spec;
    const initRng = new Rng(deriveSeed(spec.seed, "init"));
    const dropRng = new Rng(deriveSeed(spec.seed, "dropout"));
    const kt = spec.temporalKernelWidth;

    let size = spec.inputSize[0];
    if (spec.inputSize[0] !== spec.inputSize[1]) {
      throw new Error("square inputs only");
    }
    this.layers.push(new AvgPoolSpatial("stem", spec.stemPool));
    size = Math.floor(size / spec.stemPool);

    let cin = 3;
    const chans = spec.channels;
    for (let i = 0; i < 4; i++) {
      const name = `conv${i + 1}`;
      const ksp = size >= 3 ? 3 : 1;
      this.convs.push(new Conv3d(name, kt, ksp, ksp, cin, chans[i], initRng));
      this.layers.push(this.convs[i]);
      this.layers.push(new Relu(`relu${i + 1}`));
      this.stageOutputs.set(name, this.layers.length - 1);
      if (spec.dropoutP > 0) {
        this.layers.push(new Dropout(`drop${i + 1}`, spec.dropoutP, dropRng));
      }
      if (i < 3 && size >= 2) {
        this.layers.push(new AvgPoolSpatial(`pool${i + 1}`, 2));
        size = Math.floor(size / 2);
      }
      cin = chans[i];
    }
    // global spatial pooling, then a per-frame linear head
    if (size > 1) {
      this.layers.push(new AvgPoolSpatial("gap", size));
    }
    this.layers.push(new Conv3d("head", 1, 1, 1, cin, 1, initRng));
  }

  params(): Param[] {
    return this.layers.flatMap((l) => l.params());
  }

  zeroGrads(): void {
    for (const p of this.params()) p.grad.fill(0);
  }

  /** Forward a (clipLen, h, w, 3) float clip to one value per frame. */
  forward(clip: Float32Array, training: boolean, capture?: Map<string, CaptureSlot>): Float32Array {
    const [h, w] = this.spec.inputSize;
    const t = this.spec.clipLen;
    if (clip.length !== t * h * w * 3) {
      throw new Error(`clip has ${clip.length} values, expected ${t * h * w * 3}`);
    }
    let x = clip;
    let s: Shape = { t, h, w, c: 3 };
    for (let i = 0; i < this.layers.length; i++) {
      const out = this.layers[i].forward(x, s, training);
      x = out.y;
      s = out.s;
      if (capture) {
        for (const [name, slot] of capture) {
          if (this.stageOutputs.get(name) === i) {
            slot.activation = x;
            slot.shape = { ...s };
          }
        }
      }
    }
    if (s.h !== 1 || s.w !== 1 || s.c !== 1 || s.t !== t) {
      throw new Error(`unexpected output shape ${JSON.stringify(s)}`);
    }
    return x;
  }

  /** Backward from per-frame gradients; fills parameter grads. */
  backward(dPred: Float32Array, capture?: Map<string, CaptureSlot>): void {
    let dy = dPred;
    for (let i = this.layers.length - 1; i >= 0; i--) {
      dy = this.layers[i].backward(dy);
      if (capture) {
        for (const [name, slot] of capture) {
          // gradient w.r.t. the output of layer i is dy *before* stepping past i
          if (this.stageOutputs.get(name) === i - 1) {
            slot.gradient = dy;
          }
        }
      }
    }
  }

  adamStep(spec: TrainSpec): void {
    this.adamStepCount += 1;
    const t = this.adamStepCount;
    const b1 = spec.beta1;
    const b2 = spec.beta2;
    const eps = 1e-8;
    const corr1 = 1 - Math.pow(b1, t);
    const corr2 = 1 - Math.pow(b2, t);
    for (const p of this.params()) {
      for (let i = 0; i < p.value.length; i++) {
        let g = p.grad[i];
        if (spec.weightDecay > 0) g += spec.weightDecay * p.value[i];
        p.m[i] = b1 * p.m[i] + (1 - b1) * g;
        p.v[i] = b2 * p.v[i] + (1 - b2) * g * g;
        const mHat = p.m[i] / corr1;
        const vHat = p.v[i] / corr2;
        p.value[i] -= (spec.lr * mHat) / (Math.sqrt(vHat) + eps);
      }
    }
  }

  /** Temporal receptive field of a single conv stage, in frames. */
  singleStageTemporalReceptiveField(): number {
    return this.convs[0].kt;
  }
}

// -- checkpoints ---------------------------------------------------------------

interface CheckpointDoc {
  format: string;
  spec: ModelSpec;
  weights: Record<string, string>; // base64 Float32 buffers, conv{i}/head .w/.b
}

function toBase64(a: Float32Array): string {
  return Buffer.from(a.buffer, a.byteOffset, a.byteLength).toString("base64");
}

function fromBase64(s: string): Float32Array {
  const buf = Buffer.from(s, "base64");
  return new Float32Array(buf.buffer, buf.byteOffset, buf.byteLength / 4);
}

export function serializeModel(model: Model): string {
  const weights: Record<string, string> = {};
  const named = model.layers.filter((l): l is Conv3d => l instanceof Conv3d);
  for (const conv of named) {
    weights[`${conv.name}.w`] = toBase64(conv.weight.value);
    weights[`${conv.name}.b`] = toBase64(conv.bias.value);
  }
  const doc: CheckpointDoc = { format: "trainer-checkpoint-v1", spec: model.spec, weights };
  return JSON.stringify(doc, null, 1) + "\n";
}

export function deserializeModel(text: string): Model {
  const doc = JSON.parse(text) as CheckpointDoc;
  if (doc.format !== "trainer-checkpoint-v1") {
    throw new Error(`unknown checkpoint format: ${doc.format}`);
  }
  const model = new Model(doc.spec);
  for (const layer of model.layers) {
    if (!(layer instanceof Conv3d)) continue;
    const w = doc.weights[`${layer.name}.w`];
    const b = doc.weights[`${layer.name}.b`];
    if (w === undefined || b === undefined) {
      throw new Error(`checkpoint missing weights for ${layer.name}`);
    }
    layer.weight.value.set(fromBase64(w));
    layer.bias.value.set(fromBase64(b));
  }
  return model;
}
