"""Heart-rate estimation, dual ground-truth fusion and evaluation metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.fft import rfft, rfftfreq

from .ingest import Waveform
from .waveform import moving_average

HR_BAND = (2.0 / 3.0, 3.0)  # Hz; 40..180 bpm
MIN_FFT_BINS = 2**14


@dataclass
class HrSeries:
    """Per-timestep heart rate in bpm (window-center timestamps)."""

    bpm: np.ndarray
    timestamps: np.ndarray
    window_s: float = 30.0

    def __post_init__(self):
        self.bpm = np.asarray(self.bpm, dtype=np.float64)
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        if len(self.bpm) != len(self.timestamps):
            raise ValueError("bpm/timestamps length mismatch")

    def __len__(self):
        return len(self.bpm)


@dataclass
class MetricReport:
    """Heart-rate and waveform agreement metrics.

    r_f is None when either HR series has zero variance; r_t is None when no
    waveform comparison was run. Always: mae >= |me| and rmse >= mae.
    """

    me: float
    mae: float
    rmse: float
    r_f: float | None
    r_t: float | None = None
    n_windows: int = 0

    def to_dict(self):
        return {
            "me": self.me,
            "mae": self.mae,
            "rmse": self.rmse,
            "r_f": self.r_f,
            "r_t": self.r_t,
            "n_windows": self.n_windows,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def pearson(x, y):
    """Pearson correlation, or None if either input has zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.std() == 0.0 or y.std() == 0.0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def estimate_hr(
    wave: Waveform,
    window_s: float = 30.0,
    band: tuple = HR_BAND,
    hop: int = 1,
    smooth_s: float = 5.0,
) -> HrSeries:
    """Sliding-window spectral-peak heart rate.

    Each window is mean-removed, Hamming-tapered and zero-padded to the next
    power of two >= 2^14 before an FFT; the peak bin inside ``band`` gives
    the bpm. The bpm series is then smoothed with a centered moving average
    of ``smooth_s`` seconds.
    """
    fs = wave.fs
    win = int(round(window_s * fs))
    if len(wave) < win:
        raise ValueError(f"waveform of {len(wave)} samples shorter than {win}-sample window")
    nfft = 1 << max(int(np.ceil(np.log2(win))), int(np.log2(MIN_FFT_BINS)))
    freqs = rfftfreq(nfft, 1.0 / fs)
    sel = np.nonzero((freqs >= band[0]) & (freqs <= band[1]))[0]
    if len(sel) == 0:
        raise ValueError("no FFT bins inside the search band")

    windows = np.lib.stride_tricks.sliding_window_view(wave.values, win)[::hop]
    taper = np.hamming(win)
    m = windows.shape[0]
    peaks = np.empty(m, dtype=np.intp)
    chunk = 256
    for s in range(0, m, chunk):
        block = windows[s : s + chunk]
        block = (block - block.mean(axis=1, keepdims=True)) * taper
        spec = np.abs(rfft(block, n=nfft, axis=1))[:, sel]
        peaks[s : s + chunk] = np.argmax(spec, axis=1)

    bpm = freqs[sel[peaks]] * 60.0
    starts = np.arange(m) * hop
    centers = 0.5 * (wave.timestamps[starts] + wave.timestamps[starts + win - 1])
    fs_hr = fs / hop
    bpm = moving_average(bpm, int(round(smooth_s * fs_hr)))
    return HrSeries(bpm, centers, window_s)


def fuse_ground_truth(
    hr1: HrSeries,
    hr2: HrSeries,
    max_gap_bpm: float = 10.0,
    smooth_s: float = 3.0,
    per_timestep_reference: bool = False,
) -> HrSeries:
    """Fuse two oximeter HR series into one ground truth.

    Where the series agree within ``max_gap_bpm`` they are averaged;
    elsewhere the value closer to the reference (the average of the two
    full-series means, or the per-timestep mean when configured) is kept.
    The result is smoothed with a ``smooth_s`` moving average.
    """
    if len(hr1) != len(hr2):
        raise ValueError(f"length mismatch: {len(hr1)} vs {len(hr2)}")
    if not np.allclose(hr1.timestamps, hr2.timestamps):
        raise ValueError("timestamps are not aligned")
    a, b = hr1.bpm, hr2.bpm
    if per_timestep_reference:
        ref = 0.5 * (a + b)
    else:
        ref = 0.5 * (a.mean() + b.mean())
    keep_a = np.abs(a - ref) <= np.abs(b - ref)
    fused = np.where(np.abs(a - b) <= max_gap_bpm, 0.5 * (a + b), np.where(keep_a, a, b))

    dt = np.median(np.diff(hr1.timestamps)) if len(hr1) > 1 else 1.0
    fused = moving_average(fused, int(round(smooth_s / dt)))
    return HrSeries(fused, hr1.timestamps.copy(), hr1.window_s)


def error_metrics(pred: HrSeries, gt: HrSeries) -> MetricReport:
    """ME / MAE / RMSE / Pearson between two aligned HR series."""
    if len(pred) != len(gt):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(gt)}")
    if len(pred) < 2:
        raise ValueError("need at least 2 samples")
    d = pred.bpm - gt.bpm
    me = float(d.mean())
    mae = float(np.abs(d).mean())
    rmse = float(np.sqrt((d * d).mean()))
    return MetricReport(me, mae, rmse, pearson(pred.bpm, gt.bpm), None, len(pred))


def windowed_waveform_corr(pred: Waveform, gt: Waveform, window_s: float = 3.0):
    """Mean Pearson correlation over sliding windows, stride one sample.

    Inputs must be phase-aligned, equal-length and share a sample rate.
    Zero-variance windows are skipped. Returns (r_t, n_used, n_skipped).
    """
    if len(pred) != len(gt):
        raise ValueError("waveforms must have equal length")
    if abs(pred.fs - gt.fs) > 1e-6 * pred.fs:
        raise ValueError("waveforms must share a sample rate")
    win = int(round(window_s * pred.fs))
    if len(pred) < win:
        raise ValueError(f"signals shorter than one {win}-sample window")

    # global centering leaves per-window Pearson unchanged but avoids the
    # cancellation that would make constant windows look non-constant
    x = pred.values - pred.values.mean()
    y = gt.values - gt.values.mean()
    ones = np.ones(win)
    sx = np.convolve(x, ones, "valid")
    sy = np.convolve(y, ones, "valid")
    sxx = np.convolve(x * x, ones, "valid")
    syy = np.convolve(y * y, ones, "valid")
    sxy = np.convolve(x * y, ones, "valid")
    var_x = win * sxx - sx * sx
    var_y = win * syy - sy * sy
    cov = win * sxy - sx * sy

    tol_x = (1e-7 * win * max(float(np.abs(x).max()), 1e-300)) ** 2
    tol_y = (1e-7 * win * max(float(np.abs(y).max()), 1e-300)) ** 2
    valid = (var_x > tol_x) & (var_y > tol_y)
    n_used = int(valid.sum())
    n_skipped = int(len(valid) - n_used)
    if n_used == 0:
        raise ValueError("all windows had zero variance")
    r = cov[valid] / np.sqrt(var_x[valid] * var_y[valid])
    return float(r.mean()), n_used, n_skipped


# -- HR series CSV ------------------------------------------------------------


def save_hr(series: HrSeries, path) -> None:
    with open(path, "w") as fh:
        fh.write("t,bpm\n")
        for t, v in zip(series.timestamps, series.bpm):
            fh.write(f"{float(t)!r},{float(v)!r}\n")


def load_hr(path, window_s: float = 30.0) -> HrSeries:
    ts, vals = [], []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if not line:
                continue
            t, v = line.split(",")
            ts.append(float(t))
            vals.append(float(v))
    if not vals:
        raise ValueError(f"{path}: empty HR series")
    return HrSeries(np.asarray(vals), np.asarray(ts), window_s)
