/**
 * trainer CLI: train | predict | gradcam
 *
 *   train    --clips clips.json --out ckpt.json [--epochs N] [--lr F]
 *            [--seed N] [--augment] [--dropout F] [--channels a,b,c,d]
 *            [--loss-csv path]
 *   predict  --checkpoint ckpt.json --frames manifest.json --out-dir dir
 *   gradcam  --checkpoint ckpt.json --clips clips.json [--index 0]
 *            [--layer conv2] --out heat.png
 */

import * as fs from "node:fs";

import { toFloat } from "./augment.js";
import { loadClips, readClipManifest, readFrameManifest } from "./data.js";
import { gradcamClip } from "./gradcam.js";
import {
  DEFAULT_MODEL_SPEC,
  DEFAULT_TRAIN_SPEC,
  Model,
  deserializeModel,
  serializeModel,
} from "./model.js";
import { heatmapToBytes, writePngGray } from "./png.js";
import { predictVideo } from "./predict.js";
import { lossCurveCsv, train } from "./train.js";

function parseArgs(argv: string[]): { command: string; flags: Map<string, string> } {
  const command = argv[0];
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) throw new Error(`unexpected argument: ${arg}`);
    const key = arg.slice(2);
    if (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
      flags.set(key, argv[++i]);
    } else {
      flags.set(key, "true");
    }
  }
  return { command, flags };
}

function need(flags: Map<string, string>, key: string): string {
  const v = flags.get(key);
  if (v === undefined) throw new Error(`missing --${key}`);
  return v;
}

function cmdTrain(flags: Map<string, string>): void {
  const manifest = readClipManifest(need(flags, "clips"));
  const clips = loadClips(manifest);
  const modelSpec = {
    ...DEFAULT_MODEL_SPEC,
    clipLen: manifest.clipLen,
    seed: Number(flags.get("seed") ?? 0),
  };
  if (flags.has("dropout")) modelSpec.dropoutP = Number(flags.get("dropout"));
  if (flags.has("channels")) {
    const parts = flags.get("channels")!.split(",").map(Number);
    if (parts.length !== 4) throw new Error("--channels wants 4 comma-separated values");
    modelSpec.channels = parts as [number, number, number, number];
  }
  const trainSpec = {
    ...DEFAULT_TRAIN_SPEC,
    epochs: Number(flags.get("epochs") ?? DEFAULT_TRAIN_SPEC.epochs),
    lr: Number(flags.get("lr") ?? DEFAULT_TRAIN_SPEC.lr),
    seed: Number(flags.get("seed") ?? 0),
    augment: flags.get("augment") === "true",
  };
  const model = new Model(modelSpec);
  const result = train(model, clips, trainSpec);
  fs.writeFileSync(need(flags, "out"), serializeModel(model));
  if (flags.has("loss-csv")) {
    fs.writeFileSync(flags.get("loss-csv")!, lossCurveCsv(result.lossCurve));
  }
  process.stdout.write(
    JSON.stringify({
      epochs: result.lossCurve.length,
      final_loss: result.lossCurve[result.lossCurve.length - 1],
      train_correlation: result.finalCorrelation,
      degenerate_clips: result.degenerateClips,
    }) + "\n",
  );
}

function cmdPredict(flags: Map<string, string>): void {
  const model = deserializeModel(fs.readFileSync(need(flags, "checkpoint"), "utf-8"));
  const store = readFrameManifest(need(flags, "frames"));
  const result = predictVideo(model, store, need(flags, "out-dir"));
  process.stdout.write(
    JSON.stringify({ clips: result.starts.length, stitch_manifest: result.manifestPath }) + "\n",
  );
}

function cmdGradcam(flags: Map<string, string>): void {
  const model = deserializeModel(fs.readFileSync(need(flags, "checkpoint"), "utf-8"));
  const manifest = readClipManifest(need(flags, "clips"));
  const clips = loadClips(manifest);
  const index = Number(flags.get("index") ?? 0);
  if (index < 0 || index >= clips.length) throw new Error(`clip index ${index} out of range`);
  const layer = flags.get("layer") ?? "conv2";
  const map = gradcamClip(model, toFloat(clips[index].pixels), layer);
  const size = model.spec.inputSize[0];
  writePngGray(need(flags, "out"), heatmapToBytes(map), size, size);
  process.stdout.write(JSON.stringify({ layer, size }) + "\n");
}

export function main(argv: string[]): number {
  try {
    const { command, flags } = parseArgs(argv);
    if (command === "train") cmdTrain(flags);
    else if (command === "predict") cmdPredict(flags);
    else if (command === "gradcam") cmdGradcam(flags);
    else throw new Error(`unknown command: ${command ?? "(none)"}`);
    return 0;
  } catch (err) {
    process.stderr.write(
      JSON.stringify({ error: { message: err instanceof Error ? err.message : String(err) } }) + "\n",
    );
    return 1;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
