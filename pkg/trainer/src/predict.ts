/**
 * Sliding-window inference over a full cropped video: one prediction CSV per
 * clip plus a stitch manifest consumable by the pipeline's `stitch` command.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { toFloat } from "./augment.js";
import { FrameStore, clipStarts, sliceClip, writeStitchManifest, writeWaveformCsv } from "./data.js";
import { Model } from "./model.js";

export interface PredictResult {
  starts: number[];
  manifestPath: string;
}

export function predictVideo(model: Model, store: FrameStore, outDir: string): PredictResult {
  const len = model.spec.clipLen;
  if (store.n < len) {
    throw new Error(`video of ${store.n} frames is shorter than one ${len}-frame clip`);
  }
  if (store.h !== model.spec.inputSize[0] || store.w !== model.spec.inputSize[1]) {
    throw new Error(
      `frames are ${store.h}x${store.w}, model expects ${model.spec.inputSize.join("x")}`,
    );
  }
  fs.mkdirSync(outDir, { recursive: true });
  const starts = clipStarts(store.n, len);
  const clips: { start: number; path: string }[] = [];
  for (const start of starts) {
    const x = toFloat(sliceClip(store, start, len));
    const pred = model.forward(x, false);
    const name = `clip_${String(start).padStart(6, "0")}.csv`;
    writeWaveformCsv(
      path.join(outDir, name),
      store.timestamps.subarray(start, start + len),
      pred,
    );
    clips.push({ start, path: name });
  }
  const manifestPath = path.join(outDir, "stitch.json");
  writeStitchManifest(manifestPath, store.n, store.fps, store.timestamps[0], clips);
  return { starts, manifestPath };
}
