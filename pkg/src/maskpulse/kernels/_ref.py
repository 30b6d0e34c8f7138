"""NumPy reference implementations of the pixel-sampling kernels.

The compiled extension in ``_core`` mirrors these signatures; this module is
the always-available fallback and the ground truth the extension is tested
against.

Coordinate convention (used by every kernel): a pixel at row i, column j
covers the unit square [j, j+1) x [i, i+1) and its sample point sits at the
center (j + 0.5, i + 0.5).
"""

from __future__ import annotations

import numpy as np

__all__ = ["bicubic_crop", "fill_polygon", "sample_bilinear"]

# Catmull-Rom cubic (Keys kernel with a = -0.5).
_A = -0.5


def _cubic_weights(frac):
    """Weights for the 4 taps at offsets -1..+2 around each sample.

    frac: (m,) fractional parts in [0, 1). Returns (m, 4).
    """
    w = np.empty((frac.shape[0], 4))
    for k in range(4):
        d = np.abs(frac - (k - 1))
        w[:, k] = np.where(
            d <= 1.0,
            (_A + 2.0) * d**3 - (_A + 3.0) * d**2 + 1.0,
            np.where(d < 2.0, _A * (d**3 - 5.0 * d**2 + 8.0 * d - 4.0), 0.0),
        )
    return w


def _tap_indices(lo_edge, hi_edge, n_samples, size, extent):
    """Sample positions and clamped tap indices along one axis.

    Taps are clamped into the pixel range whose centers fall inside
    [lo_edge, hi_edge), further clamped to the image extent, so the output
    never depends on pixels outside the requested region.
    """
    span = hi_edge - lo_edge
    centers = lo_edge + (np.arange(n_samples) + 0.5) * (span / n_samples)
    u = centers - 0.5  # center-index space: pixel j sits at u == j
    base = np.floor(u).astype(np.intp)
    frac = u - base

    lo = int(np.ceil(lo_edge - 0.5))
    hi = int(np.ceil(hi_edge - 0.5)) - 1
    lo = max(lo, 0)
    hi = min(hi, extent - 1)
    if lo > hi:  # sub-pixel box: fall back to the nearest in-frame pixel
        lo = hi = int(np.clip(round((lo_edge + hi_edge) / 2.0 - 0.5), 0, extent - 1))

    taps = base[:, None] + np.arange(-1, 3)[None, :]
    np.clip(taps, lo, hi, out=taps)
    return taps, _cubic_weights(frac)


def bicubic_crop(frame, x0, y0, x1, y1, out_h=64, out_w=64):
    """Resample the box [x0,x1) x [y0,y1) of ``frame`` to out_h x out_w.

    Catmull-Rom bicubic; taps never read outside the box (or the frame),
    clamping to the nearest valid pixel instead. Returns float64 clamped to
    [0, 255].
    """
    h, w = frame.shape[0], frame.shape[1]
    tx, wx = _tap_indices(x0, x1, out_w, w, w)
    ty, wy = _tap_indices(y0, y1, out_h, h, h)

    src = np.asarray(frame, dtype=np.float64)
    rows = src[ty.ravel()].reshape(out_h, 4, w, 3)
    rows = np.einsum("rkwc,rk->rwc", rows, wy)
    cols = rows[:, tx.ravel()].reshape(out_h, out_w, 4, 3)
    out = np.einsum("rjkc,jk->rjc", cols, wx)
    return np.clip(out, 0.0, 255.0)


def fill_polygon(pts, height, width):
    """Even-odd rasterization of a polygon, tested at pixel centers.

    pts: (K, 2) float64 vertices as (x, y). Returns (height, width) bool.
    """
    pts = np.asarray(pts, dtype=np.float64)
    xc = np.arange(width) + 0.5
    yc = np.arange(height) + 0.5
    inside = np.zeros((height, width), dtype=bool)
    k = pts.shape[0]
    for e in range(k):
        x1, y1 = pts[e]
        x2, y2 = pts[(e + 1) % k]
        if y1 == y2:
            continue
        straddles = (y1 > yc) != (y2 > yc)  # (height,)
        xint = x1 + (yc - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddles[:, None] & (xc[None, :] < xint[:, None])
    return inside


def sample_bilinear(img, xs, ys):
    """Bilinear samples of (H, W, 3) ``img`` at points (xs, ys), edge-clamped.

    Returns (m, 3) float64.
    """
    h, w = img.shape[0], img.shape[1]
    p = np.clip(xs - 0.5, 0.0, w - 1.0)
    q = np.clip(ys - 0.5, 0.0, h - 1.0)
    j0 = np.clip(np.floor(p).astype(np.intp), 0, w - 2) if w > 1 else np.zeros(len(p), np.intp)
    i0 = np.clip(np.floor(q).astype(np.intp), 0, h - 2) if h > 1 else np.zeros(len(q), np.intp)
    fx = (p - j0) if w > 1 else np.zeros(len(p))
    fy = (q - i0) if h > 1 else np.zeros(len(q))
    j1 = np.minimum(j0 + 1, w - 1)
    i1 = np.minimum(i0 + 1, h - 1)

    img = np.asarray(img, dtype=np.float64)
    fx = fx[:, None]
    fy = fy[:, None]
    top = img[i0, j0] * (1.0 - fx) + img[i0, j1] * fx
    bot = img[i1, j0] * (1.0 - fx) + img[i1, j1] * fx
    return top * (1.0 - fy) + bot * fy
