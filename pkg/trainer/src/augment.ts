/**
 * Training-time clip augmentation: whole-clip horizontal flip with
 * probability 0.5, one illumination offset per clip ~ N(0, 10) in 8-bit
 * units, i.i.d. pixel noise ~ N(0, 4) (variance; std 2), clamp to [0, 255],
 * then scale to [0, 1] floats. Identical flip/illumination for every frame
 * of the clip.
 */

import { Rng } from "./rng.js";

export interface AugmentParams {
  flip: boolean;
  illumination: number;
}

export const ILLUMINATION_STD = 10.0;
export const PIXEL_NOISE_STD = 2.0; // N(0, 4) variance

export function drawAugmentParams(rng: Rng): AugmentParams {
  return { flip: rng.next() < 0.5, illumination: rng.normal(0, ILLUMINATION_STD) };
}

export function applyAugment(
  clip: ArrayLike<number>, // 8-bit values, (t, h, w, 3) channel-last
  t: number,
  h: number,
  w: number,
  params: AugmentParams,
  noise?: (i: number) => number,
): Float32Array {
  const c = 3;
  const out = new Float32Array(t * h * w * c);
  const rowStride = w * c;
  let i = 0;
  for (let ti = 0; ti < t; ti++) {
    for (let y = 0; y < h; y++) {
      const rowBase = (ti * h + y) * rowStride;
      for (let x = 0; x < w; x++) {
        const sx = params.flip ? w - 1 - x : x;
        const src = rowBase + sx * c;
        for (let ch = 0; ch < c; ch++, i++) {
          let v = clip[src + ch] + params.illumination;
          if (noise) v += noise(i);
          if (v < 0) v = 0;
          else if (v > 255) v = 255;
          out[i] = v / 255.0;
        }
      }
    }
  }
  return out;
}

export function augmentClip(
  clip: ArrayLike<number>,
  t: number,
  h: number,
  w: number,
  seed: number,
): Float32Array {
  const rng = new Rng(seed);
  const params = drawAugmentParams(rng);
  return applyAugment(clip, t, h, w, params, () => rng.normal(0, PIXEL_NOISE_STD));
}

/** Plain 8-bit -> [0,1] conversion (evaluation path, no augmentation). */
export function toFloat(clip: ArrayLike<number>): Float32Array {
  const out = new Float32Array(clip.length);
  for (let i = 0; i < clip.length; i++) out[i] = clip[i] / 255.0;
  return out;
}
