/**
 * Readers/writers for the pipeline's on-disk formats: raw-blob frame
 * manifests, two-column waveform CSVs, clip manifests, and stitch manifests.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { clipScale } from "./loss.js";

export interface FrameStore {
  frames: Uint8Array; // (n, h, w, 3) channel-last
  n: number;
  h: number;
  w: number;
  fps: number;
  timestamps: Float64Array;
}

export function readFrameManifest(manifestPath: string): FrameStore {
  const doc = JSON.parse(fs.readFileSync(manifestPath, "utf-8"));
  if (!doc.raw) {
    throw new Error(`${manifestPath}: trainer reads raw-blob manifests only`);
  }
  const base = path.dirname(manifestPath);
  const w = Number(doc.raw.width);
  const h = Number(doc.raw.height);
  const blob = fs.readFileSync(path.join(base, doc.raw.path));
  const frameBytes = h * w * 3;
  if (blob.length % frameBytes !== 0) {
    throw new Error(`${doc.raw.path}: size not a multiple of ${h}x${w}x3`);
  }
  const n = blob.length / frameBytes;
  const fps = Number(doc.fps);
  let timestamps: Float64Array;
  if (doc.timestamps) {
    if (doc.timestamps.length !== n) {
      throw new Error(`${manifestPath}: ${doc.timestamps.length} timestamps for ${n} frames`);
    }
    timestamps = Float64Array.from(doc.timestamps as number[]);
  } else {
    timestamps = new Float64Array(n);
    for (let i = 0; i < n; i++) timestamps[i] = i / fps;
  }
  return { frames: new Uint8Array(blob.buffer, blob.byteOffset, blob.length), n, h, w, fps, timestamps };
}

export function sliceClip(store: FrameStore, start: number, len: number): Uint8Array {
  if (start < 0 || start + len > store.n) {
    throw new Error(`clip [${start}, ${start + len}) outside ${store.n} frames`);
  }
  const frameVals = store.h * store.w * 3;
  return store.frames.subarray(start * frameVals, (start + len) * frameVals);
}

export interface WaveformData {
  t: Float64Array;
  values: Float64Array;
}

export function readWaveformCsv(csvPath: string): WaveformData {
  const lines = fs.readFileSync(csvPath, "utf-8").split("\n");
  const t: number[] = [];
  const values: number[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    const comma = line.indexOf(",");
    t.push(Number(line.slice(0, comma)));
    values.push(Number(line.slice(comma + 1)));
  }
  if (values.length < 2) throw new Error(`${csvPath}: fewer than 2 samples`);
  return { t: Float64Array.from(t), values: Float64Array.from(values) };
}

export function writeWaveformCsv(csvPath: string, t: ArrayLike<number>, values: ArrayLike<number>): void {
  const rows = ["t,value"];
  for (let i = 0; i < values.length; i++) rows.push(`${t[i]},${values[i]}`);
  fs.writeFileSync(csvPath, rows.join("\n") + "\n");
}

export interface ClipEntry {
  frames: string; // path to a raw frame manifest
  start: number;
  target: string; // path to a waveform CSV covering the clip
}

export interface ClipManifest {
  clipLen: number;
  fps: number;
  clips: ClipEntry[];
}

export function readClipManifest(manifestPath: string): ClipManifest {
  const doc = JSON.parse(fs.readFileSync(manifestPath, "utf-8"));
  const base = path.dirname(manifestPath);
  const clips = (doc.clips as ClipEntry[]).map((c) => ({
    frames: path.resolve(base, c.frames),
    start: Number(c.start),
    target: path.resolve(base, c.target),
  }));
  return { clipLen: Number(doc.clip_len), fps: Number(doc.fps), clips };
}

export interface LoadedClip {
  pixels: Uint8Array; // (clipLen, h, w, 3) 8-bit
  target: Float64Array; // clip-scaled to [0, 1]
  h: number;
  w: number;
}

export function loadClips(manifest: ClipManifest): LoadedClip[] {
  const stores = new Map<string, FrameStore>();
  const waves = new Map<string, WaveformData>();
  const out: LoadedClip[] = [];
  for (const entry of manifest.clips) {
    let store = stores.get(entry.frames);
    if (!store) {
      store = readFrameManifest(entry.frames);
      stores.set(entry.frames, store);
    }
    let wave = waves.get(entry.target);
    if (!wave) {
      wave = readWaveformCsv(entry.target);
      waves.set(entry.target, wave);
    }
    if (entry.start + manifest.clipLen > wave.values.length) {
      throw new Error(
        `target ${entry.target} has ${wave.values.length} samples, ` +
          `clip needs [${entry.start}, ${entry.start + manifest.clipLen})`,
      );
    }
    const pixels = sliceClip(store, entry.start, manifest.clipLen);
    const target = clipScale(
      wave.values.subarray(entry.start, entry.start + manifest.clipLen),
    );
    out.push({ pixels, target, h: store.h, w: store.w });
  }
  return out;
}

/** Half-length-stride clip starts: floor(k*len/2) plus a flush tail window. */
export function clipStarts(total: number, len: number): number[] {
  if (total < len) throw new Error(`sequence of ${total} shorter than clip ${len}`);
  const starts: number[] = [];
  for (let k = 0; ; k++) {
    const s = Math.floor((k * len) / 2);
    if (s + len > total) break;
    starts.push(s);
  }
  if (starts[starts.length - 1] + len < total) starts.push(total - len);
  return starts;
}

export function writeStitchManifest(
  manifestPath: string,
  totalLen: number,
  fps: number,
  t0: number,
  clips: { start: number; path: string }[],
): void {
  const doc = { total_len: totalLen, fps, t0, clips };
  fs.writeFileSync(manifestPath, JSON.stringify(doc, null, 1) + "\n");
}
