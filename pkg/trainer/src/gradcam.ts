/**
 * Clip-level Grad-CAM: gradients of the summed per-frame output w.r.t. a
 * conv stage's activations, channel-weighted maps per frame, summed over the
 * clip and min-max normalized to [0, 1] at the model's input resolution.
 */

import { CaptureSlot, Model } from "./model.js";

export function gradcamClip(model: Model, clip: Float32Array, layer: string): Float32Array {
  if (!model.stageOutputs.has(layer)) {
    throw new Error(`layer not found: ${layer} (have ${[...model.stageOutputs.keys()].join(", ")})`);
  }
  const slot: CaptureSlot = { activation: null, gradient: null, shape: null };
  const capture = new Map([[layer, slot]]);
  const pred = model.forward(clip, false, capture);
  model.zeroGrads();
  const dPred = new Float32Array(pred.length).fill(1.0); // target scalar: sum of outputs
  model.backward(dPred, capture);
  model.zeroGrads();
  if (!slot.activation || !slot.gradient || !slot.shape) {
    throw new Error(`capture failed for layer ${layer}`);
  }

  const { t, h, w, c } = slot.shape;
  const act = slot.activation;
  const grad = slot.gradient;
  // channel weights: gradients pooled over time and space
  const alpha = new Float64Array(c);
  for (let i = 0; i < grad.length; i += c) {
    for (let ch = 0; ch < c; ch++) alpha[ch] += grad[i + ch];
  }
  const inv = 1.0 / (t * h * w);
  for (let ch = 0; ch < c; ch++) alpha[ch] *= inv;

  // per-frame ReLU'd weighted maps, summed over frames
  const map = new Float64Array(h * w);
  for (let ti = 0; ti < t; ti++) {
    for (let p = 0; p < h * w; p++) {
      const base = (ti * h * w + p) * c;
      let v = 0;
      for (let ch = 0; ch < c; ch++) v += alpha[ch] * act[base + ch];
      if (v > 0) map[p] += v;
    }
  }

  // min-max normalize (constant map -> 0.5), then upsample to input size
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of map) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const size = model.spec.inputSize[0];
  const out = new Float32Array(size * size);
  const scaleY = h / size;
  const scaleX = w / size;
  for (let y = 0; y < size; y++) {
    const sy = Math.min(Math.floor(y * scaleY), h - 1);
    for (let x = 0; x < size; x++) {
      const sx = Math.min(Math.floor(x * scaleX), w - 1);
      const v = map[sy * w + sx];
      out[y * size + x] = hi === lo ? 0.5 : (v - lo) / (hi - lo);
    }
  }
  return out;
}
