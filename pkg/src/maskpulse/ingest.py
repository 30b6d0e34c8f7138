"""Loading and saving of frame sequences, landmark tracks and waveforms.

On-disk formats:
  * frame manifest: JSON with ``fps``, optional ``timestamps``, and either
    ``frames`` (list of relative image paths, PNG/PPM) or ``raw``
    ({path, width, height} of an interleaved RGB24 blob);
  * landmark CSV: header ``frame,x0..x67,y0..y67[,conf]``;
  * waveform CSV: header ``t,value``.

All floats are written with ``repr`` so that save -> load round-trips
bit-exactly. Loaded objects are immutable by convention and never silently
truncated or padded.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

N_LANDMARKS = 68


@dataclass
class FrameSequence:
    """Ordered RGB frames with per-frame timestamps."""

    frames: np.ndarray  # (n, H, W, 3) uint8
    timestamps: np.ndarray  # (n,) seconds, strictly increasing
    nominal_fps: float = 90.0

    def __post_init__(self):
        self.frames = np.ascontiguousarray(self.frames, dtype=np.uint8)
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        if self.frames.ndim != 4 or self.frames.shape[3] != 3:
            raise ValueError("frames must be (n, H, W, 3) RGB")
        if len(self.frames) != len(self.timestamps):
            raise ValueError(
                f"{len(self.frames)} frames but {len(self.timestamps)} timestamps"
            )
        _check_monotonic(self.timestamps)
        if self.nominal_fps <= 0:
            raise ValueError("nominal_fps must be > 0")

    def __len__(self):
        return len(self.frames)

    @property
    def height(self):
        return self.frames.shape[1]

    @property
    def width(self):
        return self.frames.shape[2]


@dataclass
class LandmarkTrack:
    """Per-frame 68-point facial landmark coordinates with confidence."""

    points: np.ndarray  # (n, 68, 2) float64, (x, y) pixels
    confidence: np.ndarray  # (n,) in [0, 1]

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.confidence = np.asarray(self.confidence, dtype=np.float64)
        if self.points.ndim != 3 or self.points.shape[1:] != (N_LANDMARKS, 2):
            raise ValueError("points must be (n, 68, 2)")
        if len(self.confidence) != len(self.points):
            raise ValueError("confidence length mismatch")
        bad = ~np.isfinite(self.points).all(axis=(1, 2))
        if bad.any():
            raise ValueError(f"non-finite landmarks at frame {int(np.argmax(bad))}")

    @property
    def frame_count(self) -> int:
        return len(self.points)


@dataclass
class Waveform:
    """Scalar signal with timestamps and a nominal sample rate."""

    values: np.ndarray
    timestamps: np.ndarray
    fs: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        if len(self.values) != len(self.timestamps):
            raise ValueError("values/timestamps length mismatch")
        _check_monotonic(self.timestamps)
        if self.fs <= 0:
            raise ValueError("fs must be > 0")

    def __len__(self):
        return len(self.values)

    @property
    def duration(self) -> float:
        return float(self.timestamps[-1] - self.timestamps[0])


def _check_monotonic(ts):
    if len(ts) > 1:
        diffs = np.diff(ts)
        if not (diffs > 0).all():
            idx = int(np.argmax(diffs <= 0)) + 1
            raise ValueError(f"timestamps not strictly increasing at index {idx}")


def _fmt(x: float) -> str:
    return repr(float(x))


# -- frames ------------------------------------------------------------------


def load_frames(manifest_path) -> FrameSequence:
    """Load a frame manifest (image list or raw RGB24 blob)."""
    manifest_path = os.fspath(manifest_path)
    if not os.path.isfile(manifest_path):
        raise FileNotFoundError(manifest_path)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(manifest_path)

    fps = float(manifest.get("fps", 0.0))
    if fps <= 0:
        raise ValueError(f"{manifest_path}: fps must be > 0")

    if "frames" in manifest:
        frames = []
        shape = None
        for i, rel in enumerate(manifest["frames"]):
            path = os.path.join(base, rel)
            if not os.path.isfile(path):
                raise FileNotFoundError(f"frame {i}: {path}")
            img = np.asarray(Image.open(path).convert("RGB"), dtype=np.uint8)
            if shape is None:
                shape = img.shape
            elif img.shape != shape:
                raise ValueError(
                    f"frame {i} has shape {img.shape[:2]}, expected {shape[:2]}"
                )
            frames.append(img)
        if not frames:
            raise ValueError(f"{manifest_path}: empty frame list")
        arr = np.stack(frames)
    elif "raw" in manifest:
        raw = manifest["raw"]
        path = os.path.join(base, raw["path"])
        if not os.path.isfile(path):
            raise FileNotFoundError(path)
        w, h = int(raw["width"]), int(raw["height"])
        blob = np.fromfile(path, dtype=np.uint8)
        if blob.size % (h * w * 3) != 0:
            raise ValueError(f"{path}: size not a multiple of {h}x{w}x3")
        arr = blob.reshape(-1, h, w, 3)
    else:
        raise ValueError(f"{manifest_path}: needs a 'frames' or 'raw' key")

    if "timestamps" in manifest:
        ts = np.asarray(manifest["timestamps"], dtype=np.float64)
        if len(ts) != len(arr):
            raise ValueError(
                f"{len(ts)} timestamps for {len(arr)} frames in {manifest_path}"
            )
    else:
        ts = np.arange(len(arr), dtype=np.float64) / fps
    return FrameSequence(arr, ts, fps)


def save_frames(seq: FrameSequence, out_dir, fmt: str = "png") -> str:
    """Write frames plus manifest into ``out_dir``; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "fps": seq.nominal_fps,
        "timestamps": [float(t) for t in seq.timestamps],
    }
    if fmt == "png":
        names = []
        for i, frame in enumerate(seq.frames):
            name = f"frame_{i:06d}.png"
            Image.fromarray(frame, "RGB").save(os.path.join(out_dir, name))
            names.append(name)
        manifest["frames"] = names
    elif fmt == "raw":
        seq.frames.tofile(os.path.join(out_dir, "frames.rgb"))
        manifest["raw"] = {
            "path": "frames.rgb",
            "width": int(seq.width),
            "height": int(seq.height),
        }
    else:
        raise ValueError(f"unknown frame format {fmt!r}")
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return path


# -- landmarks ----------------------------------------------------------------


def load_landmarks(path, expected_frames: int) -> LandmarkTrack:
    """Load a landmark CSV and check it has exactly ``expected_frames`` rows."""
    if expected_frames <= 0:
        raise ValueError("expected_frames must be > 0")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        ncols = len(header)
        if ncols not in (1 + 2 * N_LANDMARKS, 2 + 2 * N_LANDMARKS):
            raise ValueError(
                f"{path}: {ncols} columns, expected 1 + 136 + 1 (confidence optional)"
            )
        has_conf = ncols == 2 + 2 * N_LANDMARKS
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != ncols:
                raise ValueError(f"{path}: row {len(rows)} has {len(cells)} columns")
            rows.append([float(c) for c in cells[1:]])
    if len(rows) != expected_frames:
        raise ValueError(f"{path}: {len(rows)} rows, expected {expected_frames}")
    data = np.asarray(rows, dtype=np.float64)
    xs = data[:, :N_LANDMARKS]
    ys = data[:, N_LANDMARKS : 2 * N_LANDMARKS]
    conf = data[:, -1] if has_conf else np.ones(len(rows))
    return LandmarkTrack(np.stack([xs, ys], axis=2), conf)


def save_landmarks(track: LandmarkTrack, path) -> None:
    cols = (
        ["frame"]
        + [f"x{i}" for i in range(N_LANDMARKS)]
        + [f"y{i}" for i in range(N_LANDMARKS)]
        + ["conf"]
    )
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(track.frame_count):
            cells = [str(i)]
            cells += [_fmt(v) for v in track.points[i, :, 0]]
            cells += [_fmt(v) for v in track.points[i, :, 1]]
            cells.append(_fmt(track.confidence[i]))
            fh.write(",".join(cells) + "\n")


# -- waveforms ----------------------------------------------------------------


def load_waveform(path) -> Waveform:
    """Load a two-column (t, value) CSV; fs inferred from the time span."""
    ts, vals = [], []
    with open(path) as fh:
        fh.readline()  # header
        for line in fh:
            line = line.strip()
            if not line:
                continue
            t, v = line.split(",")
            ts.append(float(t))
            vals.append(float(v))
    if len(vals) < 2:
        raise ValueError(f"{path}: fewer than 2 samples")
    ts = np.asarray(ts)
    _check_monotonic(ts)
    fs = (len(ts) - 1) / (ts[-1] - ts[0])
    return Waveform(np.asarray(vals), ts, float(fs))


def save_waveform(wave: Waveform, path, value_name: str = "value") -> None:
    with open(path, "w") as fh:
        fh.write(f"t,{value_name}\n")
        for t, v in zip(wave.timestamps, wave.values):
            fh.write(f"{_fmt(t)},{_fmt(v)}\n")
