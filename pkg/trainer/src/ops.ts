/**
 * Spatiotemporal layers over channel-last (t, h, w, c) Float32Array buffers,
 * each with a manual backward pass. Index: ((t*H + y)*W + x)*C + c.
 */

import { Rng } from "./rng.js";

export interface Shape {
  t: number;
  h: number;
  w: number;
  c: number;
}

export function numel(s: Shape): number {
  return s.t * s.h * s.w * s.c;
}

export interface Param {
  value: Float32Array;
  grad: Float32Array;
  m: Float32Array; // Adam first moment
  v: Float32Array; // Adam second moment
}

function makeParam(n: number): Param {
  return {
    value: new Float32Array(n),
    grad: new Float32Array(n),
    m: new Float32Array(n),
    v: new Float32Array(n),
  };
}

export interface Layer {
  readonly name: string;
  forward(x: Float32Array, s: Shape, training: boolean): { y: Float32Array; s: Shape };
  backward(dy: Float32Array): Float32Array;
  params(): Param[];
}

/** 3D convolution, stride 1, SAME padding on every axis. */
export class Conv3d implements Layer {
  readonly kt: number;
  readonly kh: number;
  readonly kw: number;
  readonly cin: number;
  readonly cout: number;
  readonly weight: Param;
  readonly bias: Param;
  private lastX: Float32Array | null = null;
  private lastShape: Shape | null = null;

  constructor(
    public readonly name: string,
    kt: number,
    kh: number,
    kw: number,
    cin: number,
    cout: number,
    rng: Rng,
  ) {
    this.kt = kt;
    this.kh = kh;
    this.kw = kw;
    this.cin = cin;
    this.cout = cout;
    this.weight = makeParam(kt * kh * kw * cin * cout);
    this.bias = makeParam(cout);
    const std = Math.sqrt(2.0 / (kt * kh * kw * cin));
    for (let i = 0; i < this.weight.value.length; i++) {
      this.weight.value[i] = rng.normal(0, std);
    }
  }

  params(): Param[] {
    return [this.weight, this.bias];
  }

  forward(x: Float32Array, s: Shape, _training: boolean) {
    if (s.c !== this.cin) throw new Error(`${this.name}: expected ${this.cin} channels, got ${s.c}`);
    const { t, h, w } = s;
    const co = this.cout;
    const ci = this.cin;
    const pt = (this.kt - 1) >> 1;
    const ph = (this.kh - 1) >> 1;
    const pw = (this.kw - 1) >> 1;
    const y = new Float32Array(t * h * w * co);
    const wv = this.weight.value;
    const acc = new Float32Array(co);
    for (let ot = 0; ot < t; ot++) {
      for (let oy = 0; oy < h; oy++) {
        for (let ox = 0; ox < w; ox++) {
          acc.set(this.bias.value);
          for (let kt = 0; kt < this.kt; kt++) {
            const it = ot + kt - pt;
            if (it < 0 || it >= t) continue;
            for (let ky = 0; ky < this.kh; ky++) {
              const iy = oy + ky - ph;
              if (iy < 0 || iy >= h) continue;
              for (let kx = 0; kx < this.kw; kx++) {
                const ix = ox + kx - pw;
                if (ix < 0 || ix >= w) continue;
                const xBase = ((it * h + iy) * w + ix) * ci;
                let wBase = (((kt * this.kh + ky) * this.kw + kx) * ci) * co;
                for (let c = 0; c < ci; c++, wBase += co) {
                  const xv = x[xBase + c];
                  for (let o = 0; o < co; o++) acc[o] += xv * wv[wBase + o];
                }
              }
            }
          }
          y.set(acc, ((ot * h + oy) * w + ox) * co);
        }
      }
    }
    this.lastX = x;
    this.lastShape = s;
    return { y, s: { t, h, w, c: co } };
  }

  backward(dy: Float32Array): Float32Array {
    const x = this.lastX!;
    const s = this.lastShape!;
    const { t, h, w } = s;
    const ci = this.cin;
    const co = this.cout;
    const pt = (this.kt - 1) >> 1;
    const ph = (this.kh - 1) >> 1;
    const pw = (this.kw - 1) >> 1;
    const dx = new Float32Array(x.length);
    const wv = this.weight.value;
    const gw = this.weight.grad;
    const gb = this.bias.grad;
    for (let ot = 0; ot < t; ot++) {
      for (let oy = 0; oy < h; oy++) {
        for (let ox = 0; ox < w; ox++) {
          const yBase = ((ot * h + oy) * w + ox) * co;
          for (let o = 0; o < co; o++) gb[o] += dy[yBase + o];
          for (let kt = 0; kt < this.kt; kt++) {
            const it = ot + kt - pt;
            if (it < 0 || it >= t) continue;
            for (let ky = 0; ky < this.kh; ky++) {
              const iy = oy + ky - ph;
              if (iy < 0 || iy >= h) continue;
              for (let kx = 0; kx < this.kw; kx++) {
                const ix = ox + kx - pw;
                if (ix < 0 || ix >= w) continue;
                const xBase = ((it * h + iy) * w + ix) * ci;
                let wBase = (((kt * this.kh + ky) * this.kw + kx) * ci) * co;
                for (let c = 0; c < ci; c++, wBase += co) {
                  const xv = x[xBase + c];
                  let dxAcc = 0;
                  for (let o = 0; o < co; o++) {
                    const g = dy[yBase + o];
                    gw[wBase + o] += xv * g;
                    dxAcc += wv[wBase + o] * g;
                  }
                  dx[xBase + c] += dxAcc;
                }
              }
            }
          }
        }
      }
    }
    return dx;
  }
}

/** Spatial average pooling by an integer factor (temporal axis untouched). */
export class AvgPoolSpatial implements Layer {
  private lastShape: Shape | null = null;

  constructor(public readonly name: string, public readonly k: number) {}

  params(): Param[] {
    return [];
  }

  forward(x: Float32Array, s: Shape) {
    const k = this.k;
    if (s.h % k !== 0 || s.w % k !== 0) {
      throw new Error(`${this.name}: ${s.h}x${s.w} not divisible by ${k}`);
    }
    const oh = s.h / k;
    const ow = s.w / k;
    const y = new Float32Array(s.t * oh * ow * s.c);
    const inv = 1.0 / (k * k);
    for (let t = 0; t < s.t; t++) {
      for (let oy = 0; oy < oh; oy++) {
        for (let ox = 0; ox < ow; ox++) {
          const yBase = ((t * oh + oy) * ow + ox) * s.c;
          for (let dy = 0; dy < k; dy++) {
            const iy = oy * k + dy;
            for (let dx = 0; dx < k; dx++) {
              const xBase = ((t * s.h + iy) * s.w + ox * k + dx) * s.c;
              for (let c = 0; c < s.c; c++) y[yBase + c] += x[xBase + c];
            }
          }
          for (let c = 0; c < s.c; c++) y[yBase + c] *= inv;
        }
      }
    }
    this.lastShape = s;
    return { y, s: { t: s.t, h: oh, w: ow, c: s.c } };
  }

  backward(dy: Float32Array): Float32Array {
    const s = this.lastShape!;
    const k = this.k;
    const oh = s.h / k;
    const ow = s.w / k;
    const dx = new Float32Array(numel(s));
    const inv = 1.0 / (k * k);
    for (let t = 0; t < s.t; t++) {
      for (let oy = 0; oy < oh; oy++) {
        for (let ox = 0; ox < ow; ox++) {
          const yBase = ((t * oh + oy) * ow + ox) * s.c;
          for (let dyk = 0; dyk < k; dyk++) {
            for (let dxk = 0; dxk < k; dxk++) {
              const xBase = ((t * s.h + oy * k + dyk) * s.w + ox * k + dxk) * s.c;
              for (let c = 0; c < s.c; c++) dx[xBase + c] = dy[yBase + c] * inv;
            }
          }
        }
      }
    }
    return dx;
  }
}

export class Relu implements Layer {
  private mask: Uint8Array | null = null;

  constructor(public readonly name: string) {}

  params(): Param[] {
    return [];
  }

  forward(x: Float32Array, s: Shape) {
    const y = new Float32Array(x.length);
    const mask = new Uint8Array(x.length);
    for (let i = 0; i < x.length; i++) {
      if (x[i] > 0) {
        y[i] = x[i];
        mask[i] = 1;
      }
    }
    this.mask = mask;
    return { y, s };
  }

  backward(dy: Float32Array): Float32Array {
    const mask = this.mask!;
    const dx = new Float32Array(dy.length);
    for (let i = 0; i < dy.length; i++) if (mask[i]) dx[i] = dy[i];
    return dx;
  }
}

/** Inverted dropout; identity when p == 0 or not training. */
export class Dropout implements Layer {
  private mask: Float32Array | null = null;

  constructor(public readonly name: string, public readonly p: number, private rng: Rng) {}

  params(): Param[] {
    return [];
  }

  forward(x: Float32Array, s: Shape, training: boolean) {
    if (!training || this.p <= 0) {
      this.mask = null;
      return { y: x, s };
    }
    const keep = 1.0 - this.p;
    const scale = 1.0 / keep;
    const y = new Float32Array(x.length);
    const mask = new Float32Array(x.length);
    for (let i = 0; i < x.length; i++) {
      if (this.rng.next() < keep) {
        mask[i] = scale;
        y[i] = x[i] * scale;
      }
    }
    this.mask = mask;
    return { y, s };
  }

  backward(dy: Float32Array): Float32Array {
    if (this.mask === null) return dy;
    const dx = new Float32Array(dy.length);
    for (let i = 0; i < dy.length; i++) dx[i] = dy[i] * this.mask[i];
    return dx;
  }
}
