"""Temporal utilities: resampling, phase alignment, clip scaling, overlap-add."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import correlate

from .ingest import Waveform

DEFAULT_CLIP_LEN = 135


@dataclass(frozen=True)
class ClipWindow:
    """Half-open frame window [start, start + length)."""

    start: int
    length: int = DEFAULT_CLIP_LEN

    def __post_init__(self):
        if self.start < 0:
            raise ValueError("start must be >= 0")
        if self.length < 2:
            raise ValueError("length must be >= 2")

    @property
    def end(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class LagEstimate:
    lag_samples: int
    lag_seconds: float
    score: float


def window_starts(total_len: int, length: int) -> list[int]:
    """Half-length-stride window starts: floor(k * length / 2), plus a tail
    window flush with the end when the floored strides fall short."""
    if total_len < length:
        raise ValueError(f"sequence of {total_len} shorter than window {length}")
    starts = []
    k = 0
    while True:
        s = (k * length) // 2
        if s + length > total_len:
            break
        starts.append(s)
        k += 1
    if starts[-1] + length < total_len:
        starts.append(total_len - length)
    return starts


def hann_periodic(length: int) -> np.ndarray:
    """Periodic Hann taper 0.5 * (1 - cos(2*pi*n/L)); exact unit overlap at
    50% stride for even L."""
    n = np.arange(length)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / length))


def zscore(x) -> np.ndarray:
    """Standardize; a zero-variance input maps to all zeros."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) == 0 or np.ptp(x) == 0.0:  # ptp is exact for constant arrays
        return np.zeros_like(x)
    return (x - x.mean()) / x.std()


def moving_average(x, window: int) -> np.ndarray:
    """Centered moving average with edge shrinkage (effective size 2*(w//2)+1)."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    half = max(int(window) // 2, 0)
    if half == 0 or n == 0:
        return x.copy()
    cs = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return (cs[hi] - cs[lo]) / (hi - lo)


def resample_cubic(wave: Waveform, target_ts) -> Waveform:
    """Natural cubic-spline interpolation onto ``target_ts``.

    Targets outside the source span are clamped to the edge values.
    """
    if len(wave) < 4:
        raise ValueError("need at least 4 source samples for cubic resampling")
    target_ts = np.asarray(target_ts, dtype=np.float64)
    spline = CubicSpline(wave.timestamps, wave.values, bc_type="natural")
    clamped = np.clip(target_ts, wave.timestamps[0], wave.timestamps[-1])
    values = spline(clamped)
    if len(target_ts) < 2:
        raise ValueError("need at least 2 target timestamps")
    fs = (len(target_ts) - 1) / (target_ts[-1] - target_ts[0])
    return Waveform(values, target_ts.copy(), float(fs))


def estimate_phase_shift(
    reference: Waveform,
    target: Waveform,
    window_s: float = 10.0,
    max_lag_s: float = 1.0,
    detrend_lambda: float = 300.0,
) -> LagEstimate:
    """Lag of ``target`` relative to ``reference`` by summed windowed
    cross-correlation.

    The overlapping span is partitioned into ``window_s`` windows (hop =
    window). Each window of both signals is detrended and z-scored, the full
    cross-correlation is taken over lags within +/- max_lag_s, and the curves
    are summed across windows; the argmax of the sum is the lag. A positive
    lag means the target is delayed relative to the reference.
    """
    from .extract import detrend  # local import to avoid a module cycle

    if abs(reference.fs - target.fs) > 1e-6 * reference.fs:
        raise ValueError("reference and target must share a sample rate")
    fs = reference.fs

    t0 = max(reference.timestamps[0], target.timestamps[0])
    t1 = min(reference.timestamps[-1], target.timestamps[-1])
    if t1 - t0 < window_s:
        raise ValueError(f"overlapping span {t1 - t0:.3f}s is shorter than {window_s}s")
    r0 = int(np.searchsorted(reference.timestamps, t0 - 0.5 / fs))
    g0 = int(np.searchsorted(target.timestamps, t0 - 0.5 / fs))
    n = min(len(reference) - r0, len(target) - g0)
    ref = reference.values[r0 : r0 + n]
    tgt = target.values[g0 : g0 + n]

    win = int(round(window_s * fs))
    max_lag = int(round(max_lag_s * fs))
    if win <= 2 * max_lag:
        raise ValueError("window too short for the requested lag range")

    summed = np.zeros(2 * max_lag + 1)
    used = 0
    for s in range(0, n - win + 1, win):
        rw = ref[s : s + win]
        tw = tgt[s : s + win]
        if np.ptp(rw) == 0.0 or np.ptp(tw) == 0.0:
            continue
        rz = zscore(detrend(rw, detrend_lambda, fs))
        tz = zscore(detrend(tw, detrend_lambda, fs))
        if not rz.any() or not tz.any():
            continue
        # full cross-correlation c[lag] = sum_t rz[t] * tz[t + lag]
        full = correlate(tz, rz, mode="full")
        summed += full[win - 1 - max_lag : win + max_lag]
        used += 1
    if used == 0:
        raise ValueError("all alignment windows had zero variance")

    best = int(np.argmax(summed))
    lag = best - max_lag
    return LagEstimate(lag, lag / fs, float(summed[best]))


def shift(wave: Waveform, lag_samples: int) -> Waveform:
    """Advance the values by ``lag_samples`` relative to the timestamps.

    Positive lag pairs timestamp t[i] with value v[i + lag] (the correction
    for a target measured as delayed); output is shorter by |lag|.
    """
    k = int(lag_samples)
    n = len(wave)
    if abs(k) >= n:
        raise ValueError(f"|lag| = {abs(k)} >= signal length {n}")
    if k >= 0:
        values = wave.values[k:]
        ts = wave.timestamps[: n - k]
    else:
        values = wave.values[: n + k]
        ts = wave.timestamps[-k:]
    return Waveform(values.copy(), ts.copy(), wave.fs)


def clip_scale(values) -> np.ndarray:
    """Min-max scale a clip to [0, 1]; constant clips map to all 0.5."""
    x = np.asarray(values, dtype=np.float64)
    if len(x) < 2:
        raise ValueError("clip must have at least 2 samples")
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.full_like(x, 0.5)
    return (x - lo) / (hi - lo)


def overlap_add(windows, total_len: int, fs: float, t0: float = 0.0) -> Waveform:
    """Stitch per-window series into one waveform.

    Each window is z-scored, tapered with a periodic Hann function and summed
    into the output buffer. Windows must jointly cover [0, total_len); a gap
    is an error naming the missing interval. Summation order is fixed by
    window start for bit reproducibility.
    """
    items = []
    for clip, series in windows:
        series = np.asarray(series, dtype=np.float64)
        if len(series) != clip.length:
            raise ValueError(
                f"window at {clip.start}: series length {len(series)} != {clip.length}"
            )
        if clip.end > total_len:
            raise ValueError(f"window [{clip.start}, {clip.end}) exceeds {total_len}")
        items.append((clip, series))
    items.sort(key=lambda item: (item[0].start, item[0].length))

    covered = 0
    for clip, _ in items:
        if clip.start > covered:
            raise ValueError(f"coverage gap in [{covered}, {clip.start})")
        covered = max(covered, clip.end)
    if covered < total_len:
        raise ValueError(f"coverage gap in [{covered}, {total_len})")

    out = np.zeros(total_len)
    for clip, series in items:
        out[clip.start : clip.end] += zscore(series) * hann_periodic(clip.length)
    ts = t0 + np.arange(total_len) / fs
    return Waveform(out, ts, fs)
