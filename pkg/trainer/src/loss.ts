/** Negative Pearson correlation loss with its analytic gradient. */

export interface LossResult {
  loss: number;
  grad: Float32Array;
  degenerate: boolean;
}

export function negPearson(pred: ArrayLike<number>, target: ArrayLike<number>): LossResult {
  const n = pred.length;
  if (target.length !== n) throw new Error(`length mismatch: ${n} vs ${target.length}`);
  let mp = 0;
  let mt = 0;
  for (let i = 0; i < n; i++) {
    mp += pred[i];
    mt += target[i];
  }
  mp /= n;
  mt /= n;
  let spp = 0;
  let stt = 0;
  let spt = 0;
  for (let i = 0; i < n; i++) {
    const a = pred[i] - mp;
    const b = target[i] - mt;
    spp += a * a;
    stt += b * b;
    spt += a * b;
  }
  const grad = new Float32Array(n);
  if (spp === 0 || stt === 0) {
    return { loss: 0, grad, degenerate: true };
  }
  const sp = Math.sqrt(spp);
  const st = Math.sqrt(stt);
  const r = spt / (sp * st);
  // d(-r)/dpred_i = -(tc_i / (sp*st) - r * pc_i / sp^2); centering terms
  // vanish because tc and pc are zero-mean
  for (let i = 0; i < n; i++) {
    const pc = pred[i] - mp;
    const tc = target[i] - mt;
    grad[i] = -(tc / (sp * st) - (r * pc) / spp);
  }
  return { loss: -r, grad, degenerate: false };
}

/** Min-max scale to [0, 1]; a constant clip maps to all 0.5. */
export function clipScale(values: ArrayLike<number>): Float64Array {
  const n = values.length;
  if (n < 2) throw new Error("clip must have at least 2 samples");
  let lo = Infinity;
  let hi = -Infinity;
  for (let i = 0; i < n; i++) {
    if (values[i] < lo) lo = values[i];
    if (values[i] > hi) hi = values[i];
  }
  const out = new Float64Array(n);
  if (hi === lo) {
    out.fill(0.5);
    return out;
  }
  const inv = 1.0 / (hi - lo);
  for (let i = 0; i < n; i++) out[i] = (values[i] - lo) * inv;
  return out;
}

export function pearson(a: ArrayLike<number>, b: ArrayLike<number>): number {
  const { loss, degenerate } = negPearson(a, b);
  if (degenerate) return 0;
  return -loss;
}
