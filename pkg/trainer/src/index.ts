export { Rng, deriveSeed } from "./rng.js";
export { negPearson, clipScale, pearson } from "./loss.js";
export {
  augmentClip,
  applyAugment,
  drawAugmentParams,
  toFloat,
  ILLUMINATION_STD,
  PIXEL_NOISE_STD,
} from "./augment.js";
export type { AugmentParams } from "./augment.js";
export {
  Model,
  serializeModel,
  deserializeModel,
  DEFAULT_MODEL_SPEC,
  DEFAULT_TRAIN_SPEC,
} from "./model.js";
export type { ModelSpec, TrainSpec } from "./model.js";
export { train, lossCurveCsv } from "./train.js";
export { predictVideo } from "./predict.js";
export { gradcamClip } from "./gradcam.js";
export {
  readFrameManifest,
  readWaveformCsv,
  writeWaveformCsv,
  readClipManifest,
  loadClips,
  sliceClip,
  clipStarts,
  writeStitchManifest,
} from "./data.js";
export type { FrameStore, ClipManifest, LoadedClip } from "./data.js";
export { writePngGray, heatmapToBytes } from "./png.js";
