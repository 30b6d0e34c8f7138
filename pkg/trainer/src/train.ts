/** Training loop: negative-Pearson regression over clip batches with Adam. */

import { augmentClip, toFloat } from "./augment.js";
import { LoadedClip } from "./data.js";
import { negPearson, pearson } from "./loss.js";
import { Model, TrainSpec } from "./model.js";
import { Rng, deriveSeed } from "./rng.js";

export interface TrainResult {
  lossCurve: number[]; // mean loss per epoch
  finalCorrelation: number; // mean train-set correlation, evaluation mode
  degenerateClips: number;
}

export function train(model: Model, clips: LoadedClip[], spec: TrainSpec): TrainResult {
  if (clips.length === 0) throw new Error("no clips to train on");
  const t = model.spec.clipLen;
  const [h, w] = model.spec.inputSize;
  for (const clip of clips) {
    if (clip.h !== h || clip.w !== w) {
      throw new Error(`clip is ${clip.h}x${clip.w}, model expects ${h}x${w}`);
    }
    if (clip.pixels.length !== t * h * w * 3) {
      throw new Error(
        `clip has ${clip.pixels.length / (h * w * 3)} frames, model expects ${t}`,
      );
    }
    if (clip.target.length !== t) {
      throw new Error(`target has ${clip.target.length} samples, expected ${t}`);
    }
  }

  const augRng = new Rng(deriveSeed(spec.seed, "augment"));
  const lossCurve: number[] = [];
  let degenerate = 0;
  const batch = Math.max(1, spec.batchSize);
  for (let epoch = 0; epoch < spec.epochs; epoch++) {
    let epochLoss = 0;
    let sinceStep = 0;
    model.zeroGrads();
    for (let ci = 0; ci < clips.length; ci++) {
      const clip = clips[ci];
      const x = spec.augment
        ? augmentClip(clip.pixels, t, h, w, augRng.int(0x7fffffff))
        : toFloat(clip.pixels);
      const pred = model.forward(x, true);
      const { loss, grad, degenerate: isDegenerate } = negPearson(pred, clip.target);
      if (isDegenerate) degenerate += 1;
      epochLoss += loss;
      model.backward(grad);
      sinceStep += 1;
      if (sinceStep === batch || ci === clips.length - 1) {
        model.adamStep(spec);
        model.zeroGrads();
        sinceStep = 0;
      }
    }
    lossCurve.push(epochLoss / clips.length);
  }

  let corr = 0;
  for (const clip of clips) {
    const pred = model.forward(toFloat(clip.pixels), false);
    corr += pearson(pred, clip.target);
  }
  return {
    lossCurve,
    finalCorrelation: corr / clips.length,
    degenerateClips: degenerate,
  };
}

export function lossCurveCsv(curve: number[]): string {
  const rows = ["epoch,loss"];
  curve.forEach((loss, i) => rows.push(`${i},${loss}`));
  return rows.join("\n") + "\n";
}
