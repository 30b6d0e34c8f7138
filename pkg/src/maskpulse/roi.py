"""Landmark-driven face cropping to 64x64 with bicubic resampling.

The face box is the tight landmark box extended by 5% of its width on each
horizontal side, 30% of its height above (forehead) and 5% below (jaw), then
squarified by growing the shorter axis symmetrically about its center.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .ingest import FrameSequence, LandmarkTrack, load_frames, save_frames

CROP_SIZE = 64

HORIZONTAL_EXTEND = 0.05  # of tight width, per side
TOP_EXTEND = 0.30  # of tight height
BOTTOM_EXTEND = 0.05  # of tight height


@dataclass(frozen=True)
class BBox:
    """Half-open pixel box [x0, x1) x [y0, y1)."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    def as_array(self):
        return np.array([self.x0, self.y0, self.x1, self.y1])


@dataclass
class CroppedSequence:
    """64x64 crops with their timestamps and source boxes."""

    frames: np.ndarray  # (n, 64, 64, 3) float64 or uint8
    timestamps: np.ndarray
    boxes: np.ndarray  # (n, 4) as (x0, y0, x1, y1)

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        self.boxes = np.asarray(self.boxes, dtype=np.float64)
        if not (len(self.frames) == len(self.timestamps) == len(self.boxes)):
            raise ValueError("frames/timestamps/boxes length mismatch")

    def __len__(self):
        return len(self.frames)

    @property
    def fs(self) -> float:
        if len(self.timestamps) < 2:
            raise ValueError("need at least 2 frames for a sample rate")
        return float((len(self.timestamps) - 1) / (self.timestamps[-1] - self.timestamps[0]))

    def source_box(self, i: int) -> BBox:
        return BBox(*self.boxes[i])


def bbox_from_landmarks(points) -> BBox:
    """Extended square face box from one frame's 68 landmarks."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape != (68, 2):
        raise ValueError("expected (68, 2) landmarks")
    if not np.isfinite(pts).all():
        raise ValueError("non-finite landmarks")
    xmin, ymin = pts.min(axis=0)
    xmax, ymax = pts.max(axis=0)
    w = xmax - xmin
    h = ymax - ymin
    if w <= 0.0 or h <= 0.0:
        raise ValueError("degenerate landmarks: zero-area tight box")

    x0 = xmin - HORIZONTAL_EXTEND * w
    x1 = xmax + HORIZONTAL_EXTEND * w
    y0 = ymin - TOP_EXTEND * h
    y1 = ymax + BOTTOM_EXTEND * h

    bw = x1 - x0
    bh = y1 - y0
    if bw < bh:
        cx = 0.5 * (x0 + x1)
        x0, x1 = cx - 0.5 * bh, cx + 0.5 * bh
    elif bh < bw:
        cy = 0.5 * (y0 + y1)
        y0, y1 = cy - 0.5 * bw, cy + 0.5 * bw
    return BBox(x0, y0, x1, y1)


def crop_resize(frame, box: BBox, out_size: int = CROP_SIZE):
    """Bicubic crop of ``box`` to out_size x out_size, clamped to [0, 255].

    Samples never read outside the box (nor the frame): taps are clamped to
    the nearest pixel whose center lies inside, so padding the frame outside
    the box cannot change the result.
    """
    if box.width <= 0 or box.height <= 0:
        raise ValueError("box area must be > 0")
    frame = np.ascontiguousarray(frame)
    if frame.dtype != np.uint8:
        frame = np.ascontiguousarray(frame, dtype=np.float64)
    return kernels.bicubic_crop(frame, box.x0, box.y0, box.x1, box.y1, out_size, out_size)


def crop_sequence(
    seq: FrameSequence,
    track: LandmarkTrack,
    out_size: int = CROP_SIZE,
    workers: int = 1,
) -> CroppedSequence:
    """Per-frame bbox_from_landmarks + crop_resize over a whole sequence."""
    n = len(seq)
    if track.frame_count != n:
        raise ValueError(
            f"landmark track has {track.frame_count} frames, sequence has {n}"
        )
    boxes = np.empty((n, 4))
    for i in range(n):
        try:
            boxes[i] = bbox_from_landmarks(track.points[i]).as_array()
        except ValueError as err:
            raise ValueError(f"frame {i}: {err}") from err

    out = np.empty((n, out_size, out_size, 3))

    def _do(i):
        out[i] = kernels.bicubic_crop(
            seq.frames[i], boxes[i, 0], boxes[i, 1], boxes[i, 2], boxes[i, 3],
            out_size, out_size,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_do, range(n)))
    else:
        for i in range(n):
            _do(i)
    return CroppedSequence(out, seq.timestamps.copy(), boxes)


def track_to_crop_coords(track: LandmarkTrack, boxes, out_size: int = CROP_SIZE) -> LandmarkTrack:
    """Map a landmark track from frame coordinates into crop coordinates."""
    boxes = np.asarray(boxes, dtype=np.float64)
    if len(boxes) != track.frame_count:
        raise ValueError("one box per frame required")
    scale = out_size / (boxes[:, 2] - boxes[:, 0])
    origin = boxes[:, None, 0:2]
    pts = (track.points - origin) * scale[:, None, None]
    return LandmarkTrack(pts, track.confidence.copy())


def save_cropped(cropped: CroppedSequence, out_dir, fmt: str = "png") -> str:
    """Checkpoint crops as an ingest-compatible manifest directory.

    Float frames are rounded to uint8; a boxes.csv sits beside the manifest.
    """
    frames = cropped.frames
    if frames.dtype != np.uint8:
        frames = np.clip(np.rint(frames), 0, 255).astype(np.uint8)
    fs = cropped.fs if len(cropped) > 1 else 90.0
    seq = FrameSequence(frames, cropped.timestamps, fs)
    path = save_frames(seq, out_dir, fmt=fmt)
    with open(os.path.join(out_dir, "boxes.csv"), "w") as fh:
        fh.write("x0,y0,x1,y1\n")
        for b in cropped.boxes:
            fh.write(",".join(repr(float(v)) for v in b) + "\n")
    return path


def load_cropped(manifest_path) -> CroppedSequence:
    seq = load_frames(manifest_path)
    boxes_path = os.path.join(os.path.dirname(os.fspath(manifest_path)), "boxes.csv")
    if os.path.isfile(boxes_path):
        rows = []
        with open(boxes_path) as fh:
            fh.readline()
            for line in fh:
                if line.strip():
                    rows.append([float(c) for c in line.split(",")])
        boxes = np.asarray(rows)
    else:
        boxes = np.tile(
            np.array([0.0, 0.0, float(seq.width), float(seq.height)]), (len(seq), 1)
        )
    return CroppedSequence(seq.frames, seq.timestamps, boxes)
