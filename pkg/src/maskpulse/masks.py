"""Synthetic face-mask compositing over cropped sequences.

A mask is the landmark polygon through ``landmark_indices`` (default: jaw
contour 1..15 plus nose-bridge point 28), filled either with black or with a
texture pattern. The pattern is anchored to the first frame's landmarks and
follows the face through a per-frame least-squares similarity transform.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from . import kernels
from .ingest import LandmarkTrack
from .roi import CROP_SIZE, CroppedSequence

# Jaw contour ear-to-ear plus the nose bridge: a wide, medium-coverage mask.
DEFAULT_MASK_INDICES = tuple(range(1, 16)) + (28,)

_DEGENERATE_AREA = 1e-9


@dataclass
class SimTransform:
    """2D similarity: p -> scale * R(rotation) @ p + translation."""

    scale: float
    rotation: float
    translation: tuple

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be > 0")

    def matrix(self):
        c = self.scale * np.cos(self.rotation)
        s = self.scale * np.sin(self.rotation)
        return np.array([[c, -s], [s, c]])

    def apply(self, points):
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.matrix().T + np.asarray(self.translation)

    def inverse(self) -> "SimTransform":
        inv_m = self.matrix().T / self.scale**2  # R^-1 / s
        t = -inv_m @ np.asarray(self.translation)
        return SimTransform(1.0 / self.scale, -self.rotation, (t[0], t[1]))


@dataclass
class MaskSpec:
    """How to build the synthetic mask for one sequence."""

    mode: str  # "black" or "pattern"
    pattern_image: np.ndarray | None = None
    landmark_indices: tuple = DEFAULT_MASK_INDICES
    rng_seed: int = 0
    pattern_path: str | None = None  # provenance only, for JSON round-trips

    def __post_init__(self):
        if self.mode not in ("black", "pattern"):
            raise ValueError(f"unknown mask mode {self.mode!r}")
        self.landmark_indices = tuple(int(i) for i in self.landmark_indices)
        if len(self.landmark_indices) < 3:
            raise ValueError("mask polygon needs at least 3 landmark indices")
        if any(i < 0 or i > 67 for i in self.landmark_indices):
            raise ValueError("landmark indices must be in [0, 67]")
        if self.mode == "pattern" and self.pattern_image is None:
            raise ValueError("pattern mode requires a pattern image")

    def to_json(self, path) -> None:
        doc = {
            "mode": self.mode,
            "pattern": self.pattern_path,
            "landmark_indices": list(self.landmark_indices),
            "seed": self.rng_seed,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "MaskSpec":
        with open(path) as fh:
            doc = json.load(fh)
        pattern = None
        pattern_path = doc.get("pattern")
        if doc["mode"] == "pattern":
            full = pattern_path
            if not os.path.isabs(full):
                full = os.path.join(os.path.dirname(os.fspath(path)), full)
            pattern = np.asarray(Image.open(full).convert("RGB"), dtype=np.uint8)
        return cls(
            mode=doc["mode"],
            pattern_image=pattern,
            landmark_indices=tuple(doc.get("landmark_indices", DEFAULT_MASK_INDICES)),
            rng_seed=int(doc.get("seed", 0)),
            pattern_path=pattern_path,
        )


@dataclass
class AnchoredPattern:
    """Pattern resized to crop size plus its anchor landmark positions."""

    pattern: np.ndarray  # (64, 64, 3) float64
    anchors: np.ndarray  # (k, 2) in pattern coordinates
    translation: tuple  # the drawn (dx, dy)


def estimate_similarity(src, dst) -> SimTransform:
    """Least-squares similarity (no reflection) mapping src onto dst.

    Closed form: with centered points p, q, fit the matrix [[a, -b], [b, a]]
    minimizing sum ||M p + t - q||^2, which is the global optimum over
    rotation + isotropic scale + translation.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise ValueError("src/dst must both be (N, 2)")
    if len(src) < 2:
        raise ValueError("need at least 2 point pairs")
    src_mean = src.mean(axis=0)
    dst_mean = dst.mean(axis=0)
    p = src - src_mean
    q = dst - dst_mean
    denom = (p * p).sum()
    if denom < 1e-12:
        raise ValueError("degenerate source points (all coincident)")
    a = (p * q).sum() / denom
    b = (p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]).sum() / denom
    scale = float(np.hypot(a, b))
    if scale < 1e-12:
        raise ValueError("degenerate fit: destination collapses to a point")
    rotation = float(np.arctan2(b, a))
    m = np.array([[a, -b], [b, a]])
    t = dst_mean - m @ src_mean
    return SimTransform(scale, rotation, (float(t[0]), float(t[1])))


def polygon_area(pts) -> float:
    """Signed shoelace area."""
    pts = np.asarray(pts, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def prepare_pattern(pattern, first_frame_landmarks, spec: MaskSpec) -> AnchoredPattern:
    """Resize the pattern to crop size and draw its anchoring translation.

    The translation is drawn uniformly from the integer translations that
    keep every mask-polygon landmark of the first frame inside the pattern
    support; anchors are those landmarks in pattern coordinates.
    """
    pattern = np.ascontiguousarray(pattern)
    if pattern.ndim != 3 or pattern.shape[2] != 3 or pattern.size == 0:
        raise ValueError("pattern must be a non-empty (H, W, 3) image")
    if pattern.dtype != np.uint8:
        pattern = np.ascontiguousarray(pattern, dtype=np.float64)
    resized = kernels.bicubic_crop(
        pattern, 0.0, 0.0, float(pattern.shape[1]), float(pattern.shape[0]),
        CROP_SIZE, CROP_SIZE,
    )

    pts = np.asarray(first_frame_landmarks, dtype=np.float64)[list(spec.landmark_indices)]
    lo_x = int(np.floor(pts[:, 0].max() - CROP_SIZE)) + 1
    hi_x = int(np.floor(pts[:, 0].min()))
    lo_y = int(np.floor(pts[:, 1].max() - CROP_SIZE)) + 1
    hi_y = int(np.floor(pts[:, 1].min()))
    if lo_x > hi_x or lo_y > hi_y:
        raise ValueError("no feasible pattern translation keeps the landmarks inside")

    rng = np.random.default_rng(spec.rng_seed)
    dx = int(rng.integers(lo_x, hi_x + 1))
    dy = int(rng.integers(lo_y, hi_y + 1))
    anchors = pts - np.array([dx, dy], dtype=np.float64)
    return AnchoredPattern(resized, anchors, (dx, dy))


def apply_mask_frame(frame, landmarks, spec: MaskSpec, anchored: AnchoredPattern | None = None):
    """Composite the mask onto one crop frame.

    Returns (masked_frame, applied). A degenerate polygon (collinear points)
    passes the frame through untouched with applied=False. Pixels outside the
    polygon are always bit-identical to the input.
    """
    frame = np.asarray(frame)
    poly = np.asarray(landmarks, dtype=np.float64)[list(spec.landmark_indices)]
    if abs(polygon_area(poly)) < _DEGENERATE_AREA:
        return frame.copy(), False

    h, w = frame.shape[0], frame.shape[1]
    inside = kernels.fill_polygon(np.ascontiguousarray(poly), h, w)
    out = frame.copy()
    if spec.mode == "black":
        out[inside] = 0
        return out, True

    if anchored is None:
        raise ValueError("pattern mode requires an AnchoredPattern")
    transform = estimate_similarity(anchored.anchors, poly)
    inv = transform.inverse()
    ii, jj = np.nonzero(inside)
    centers = np.column_stack([jj + 0.5, ii + 0.5])
    src = inv.apply(centers)
    vals = kernels.sample_bilinear(
        anchored.pattern, np.ascontiguousarray(src[:, 0]), np.ascontiguousarray(src[:, 1])
    )
    if out.dtype == np.uint8:
        vals = np.clip(np.rint(vals), 0, 255).astype(np.uint8)
    out[ii, jj] = vals
    return out, True


def mask_sequence(cropped: CroppedSequence, track: LandmarkTrack, spec: MaskSpec):
    """Mask every frame, anchoring the pattern on the first frame.

    ``track`` must be in crop coordinates. Returns (masked CroppedSequence,
    applied flags per frame).
    """
    n = len(cropped)
    if track.frame_count != n:
        raise ValueError(f"track has {track.frame_count} frames, sequence has {n}")
    anchored = None
    if spec.mode == "pattern":
        anchored = prepare_pattern(spec.pattern_image, track.points[0], spec)

    frames = np.empty_like(cropped.frames)
    applied = np.zeros(n, dtype=bool)
    for i in range(n):
        try:
            frames[i], applied[i] = apply_mask_frame(
                cropped.frames[i], track.points[i], spec, anchored
            )
        except ValueError as err:
            raise ValueError(f"frame {i}: {err}") from err
    out = CroppedSequence(frames, cropped.timestamps.copy(), cropped.boxes.copy())
    return out, applied
