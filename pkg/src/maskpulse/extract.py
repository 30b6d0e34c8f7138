"""Blood-volume-pulse extraction from cropped face sequences.

Four classical extractors over the spatially averaged RGB traces:

  chrom      chrominance projection X = 3R - 2G, Y = 1.5R + G - 1.5B on
             window-mean-normalized channels, band-passed, alpha-tuned,
             Hann overlap-added;
  pos        plane-orthogonal-to-skin projection S1 = G - B,
             S2 = G + B - 2R on window-normalized channels, stride-1
             accumulation;
  ica_poh10  blind source separation of the z-scored channels, selecting the
             component with the highest in-band spectral power ratio;
  ica_poh11  as above with smoothness-priors detrending and 5-point moving
             average smoothing around the separation.

Shared conditioning lives here too: spatial averaging, smoothness-priors
detrending and the zero-phase Butterworth band-pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import rfft, rfftfreq
from scipy.linalg import solveh_banded
from scipy.signal import butter, sosfiltfilt

from .ingest import Waveform
from .waveform import ClipWindow, moving_average, overlap_add, window_starts, zscore

PASSBAND = (2.0 / 3.0, 3.0)  # Hz, 40..180 bpm


@dataclass
class RgbTraces:
    """Spatial mean per frame and channel."""

    r: np.ndarray
    g: np.ndarray
    b: np.ndarray
    timestamps: np.ndarray
    fs: float

    def __post_init__(self):
        n = len(self.r)
        if not (len(self.g) == len(self.b) == len(self.timestamps) == n):
            raise ValueError("channel/timestamp lengths differ")

    def __len__(self):
        return len(self.r)

    def stacked(self):
        return np.vstack([self.r, self.g, self.b])


@dataclass
class ExtractorConfig:
    window_len_s: float = 1.5
    bandpass: tuple = PASSBAND
    detrend_lambda: float = 300.0  # at 30 Hz; scaled by (fs/30)^2 at use
    ica_components: int = 3
    pos_window_s: float = 1.6
    ica_max_iter: int = 500
    ica_tol: float = 1e-6

    def __post_init__(self):
        lo, hi = self.bandpass
        if not 0 < lo < hi:
            raise ValueError("bandpass must satisfy 0 < f_lo < f_hi")
        if self.window_len_s <= 0 or self.pos_window_s <= 0:
            raise ValueError("window lengths must be > 0")

    def validate_for(self, fs: float):
        lo, hi = self.bandpass
        if hi >= fs / 2:
            raise ValueError(f"bandpass upper edge {hi} Hz >= Nyquist {fs / 2} Hz")
        if self.window_len_s * fs < 2:
            raise ValueError("window shorter than 2 samples")


def spatial_average(cropped, pixel_mask=None) -> RgbTraces:
    """Per-frame mean over all pixels per channel.

    ``pixel_mask`` (H, W) bool optionally restricts the average to selected
    pixels (off by default; hook for skin masking).
    """
    frames = np.asarray(cropped.frames, dtype=np.float64)
    if len(frames) == 0:
        raise ValueError("empty sequence")
    if pixel_mask is not None:
        sel = frames[:, pixel_mask, :]  # (n, m, 3)
        means = sel.mean(axis=1)
    else:
        means = frames.mean(axis=(1, 2))
    ts = np.asarray(cropped.timestamps, dtype=np.float64)
    fs = (len(ts) - 1) / (ts[-1] - ts[0]) if len(ts) > 1 else 0.0
    return RgbTraces(means[:, 0], means[:, 1], means[:, 2], ts, float(fs))


def detrend(x, lam: float = 300.0, fs: float = 30.0) -> np.ndarray:
    """Remove the smoothness-priors trend from a series.

    Solves z = (I + L^2 D2' D2)^-1 x with D2 the second-difference operator
    and returns x - z. ``lam`` is the smoothing parameter at 30 Hz; it is
    scaled by (fs/30)^2 so the effective cutoff frequency is sample-rate
    independent. The system is pentadiagonal and solved with a banded
    Cholesky factorization.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 3:
        raise ValueError("need at least 3 samples to detrend")
    if not np.isfinite(x).all():
        raise ValueError("non-finite input")
    lam_eff = lam * (fs / 30.0) ** 2
    n = len(x)
    lam2 = lam_eff * lam_eff

    # upper banded form of I + lam^2 * D2'D2 (pentadiagonal, SPD)
    ab = np.zeros((3, n))
    main = np.full(n, 6.0)
    main[[0, -1]] = 1.0
    main[[1, -2]] = 5.0
    off1 = np.full(n - 1, -4.0)
    off1[[0, -1]] = -2.0
    ab[0, 2:] = lam2
    ab[1, 1:] = lam2 * off1
    ab[2] = 1.0 + lam2 * main
    trend = solveh_banded(ab, x)
    return x - trend


def bandpass(x, f_lo: float, f_hi: float, fs: float, order: int = 4) -> np.ndarray:
    """Zero-phase Butterworth band-pass (forward-backward)."""
    if not 0 < f_lo < f_hi < fs / 2:
        raise ValueError(f"band ({f_lo}, {f_hi}) Hz invalid for fs = {fs} Hz")
    sos = butter(order, [f_lo, f_hi], btype="bandpass", fs=fs, output="sos")
    return sosfiltfilt(sos, np.asarray(x, dtype=np.float64))


def _normalize_window(w):
    """Divide by the window mean; zero-mean windows yield None."""
    m = w.mean()
    if m == 0.0:
        return None
    return w / m


def chrom(traces: RgbTraces, cfg: ExtractorConfig | None = None) -> Waveform:
    """Chrominance-based extraction with Hann overlap-add stitching."""
    cfg = cfg or ExtractorConfig()
    cfg.validate_for(traces.fs)
    fs = traces.fs
    n = len(traces)
    length = int(round(cfg.window_len_s * fs))
    if n < length:
        raise ValueError(f"{n} samples is shorter than one {length}-sample window")

    f_lo, f_hi = cfg.bandpass
    windows = []
    for s in window_starts(n, length):
        sl = slice(s, s + length)
        rw, gw, bw = traces.r[sl], traces.g[sl], traces.b[sl]
        if np.ptp(rw) == 0.0 and np.ptp(gw) == 0.0 and np.ptp(bw) == 0.0:
            windows.append((ClipWindow(s, length), np.zeros(length)))
            continue
        rn = _normalize_window(rw)
        gn = _normalize_window(gw)
        bn = _normalize_window(bw)
        if rn is None or gn is None or bn is None:
            windows.append((ClipWindow(s, length), np.zeros(length)))
            continue
        x = bandpass(3.0 * rn - 2.0 * gn, f_lo, f_hi, fs)
        y = bandpass(1.5 * rn + gn - 1.5 * bn, f_lo, f_hi, fs)
        sy = y.std()
        if sy == 0.0:
            windows.append((ClipWindow(s, length), np.zeros(length)))
            continue
        windows.append((ClipWindow(s, length), x - (x.std() / sy) * y))

    wave = overlap_add(windows, n, fs, t0=float(traces.timestamps[0]))
    values = wave.values - wave.values.mean()
    return Waveform(values, traces.timestamps.copy(), fs, meta={"algo": "chrom"})


def pos(traces: RgbTraces, cfg: ExtractorConfig | None = None) -> Waveform:
    """Plane-orthogonal-to-skin extraction (stride-1 sliding window)."""
    cfg = cfg or ExtractorConfig()
    cfg.validate_for(traces.fs)
    fs = traces.fs
    n = len(traces)
    length = int(round(cfg.pos_window_s * fs))
    if n < length:
        raise ValueError(f"{n} samples is shorter than one {length}-sample window")

    c = np.stack([traces.r, traces.g, traces.b], axis=0)  # (3, n)
    view = np.lib.stride_tricks.sliding_window_view(c, length, axis=1)  # (3, m, L)
    means = view.mean(axis=2)  # (3, m)
    ok = (means != 0.0).all(axis=0)
    safe = np.where(means == 0.0, 1.0, means)
    norm = view / safe[:, :, None]

    s1 = norm[1] - norm[2]  # G - B
    s2 = norm[1] + norm[2] - 2.0 * norm[0]  # G + B - 2R
    sd1 = s1.std(axis=1)
    sd2 = s2.std(axis=1)
    ok &= sd2 != 0.0
    alpha = np.where(sd2 == 0.0, 0.0, sd1 / np.where(sd2 == 0.0, 1.0, sd2))
    h = s1 + alpha[:, None] * s2
    h -= h.mean(axis=1, keepdims=True)
    h[~ok] = 0.0

    out = np.zeros(n)
    for j in range(length):  # fold the window matrix back onto the signal
        out[j : j + h.shape[0]] += h[:, j]
    out -= out.mean()
    return Waveform(out, traces.timestamps.copy(), fs, meta={"algo": "pos"})


# -- ICA ----------------------------------------------------------------------


def _fastica_deflation(x, n_components, seed, max_iter, tol):
    """Deflationary fixed-point ICA with tanh nonlinearity on (c, n) data.

    Returns the (m, n) sources or None when whitening degenerates or any
    component fails to converge.
    """
    c, n = x.shape
    cov = (x @ x.T) / n
    evals, evecs = np.linalg.eigh(cov)
    if evals[-1] <= 0 or evals[0] < 1e-12 * evals[-1]:
        return None
    white = (evecs / np.sqrt(evals)).T  # (c, c), rows whiten
    z = white @ x

    rng = np.random.default_rng(seed)
    w_all = np.zeros((n_components, c))
    for i in range(n_components):
        w = rng.standard_normal(c)
        w /= np.linalg.norm(w)
        converged = False
        for _ in range(max_iter):
            proj = w @ z
            g = np.tanh(proj)
            g_prime = 1.0 - g * g
            w_new = (z * g).mean(axis=1) - g_prime.mean() * w
            if i > 0:
                w_new -= w_all[:i].T @ (w_all[:i] @ w_new)
            nrm = np.linalg.norm(w_new)
            if nrm == 0.0:
                break
            w_new /= nrm
            if abs(abs(w_new @ w) - 1.0) < tol:
                w = w_new
                converged = True
                break
            w = w_new
        if not converged:
            return None
        w_all[i] = w
    return w_all @ z


def _inband_power_ratio(x, band, fs):
    spec = np.abs(rfft(x - x.mean())) ** 2
    freqs = rfftfreq(len(x), 1.0 / fs)
    total = spec[1:].sum()
    if total == 0.0:
        return 0.0
    sel = (freqs >= band[0]) & (freqs <= band[1])
    return float(spec[sel].sum() / total)


def _ica_extract(traces: RgbTraces, cfg: ExtractorConfig, seed, with_detrend: bool, algo: str) -> Waveform:
    cfg.validate_for(traces.fs)
    fs = traces.fs
    n = len(traces)
    if n < 256:
        raise ValueError(f"ICA extraction needs >= 256 samples, got {n}")
    f_lo, f_hi = cfg.bandpass

    channels = traces.stacked()
    # a constant raw channel leaves fewer sources than components
    fallback = any(np.ptp(ch) == 0.0 for ch in channels)
    if not fallback and with_detrend:
        channels = np.vstack(
            [moving_average(detrend(ch, cfg.detrend_lambda, fs), 5) for ch in channels]
        )

    if not fallback:
        sds = channels.std(axis=1)
        if (sds == 0.0).any():
            fallback = True
        else:
            z = (channels - channels.mean(axis=1, keepdims=True)) / sds[:, None]
            sources = _fastica_deflation(
                z, cfg.ica_components, seed, cfg.ica_max_iter, cfg.ica_tol
            )
            if sources is None:
                fallback = True

    if fallback:
        selected = zscore(traces.g)
    else:
        ratios = [_inband_power_ratio(s, (f_lo, f_hi), fs) for s in sources]
        selected = sources[int(np.argmax(ratios))]
        gsd = traces.g.std()
        if gsd > 0.0:
            corr = np.corrcoef(selected, traces.g)[0, 1]
            if corr < 0.0:
                selected = -selected

    if with_detrend:
        selected = detrend(selected, cfg.detrend_lambda, fs)
    out = bandpass(selected, f_lo, f_hi, fs)
    out -= out.mean()
    return Waveform(
        out, traces.timestamps.copy(), fs, meta={"algo": algo, "fallback": fallback}
    )


def ica_poh10(traces: RgbTraces, cfg: ExtractorConfig | None = None, seed: int = 0) -> Waveform:
    """ICA on z-scored channels; picks the most pulse-like component."""
    return _ica_extract(traces, cfg or ExtractorConfig(), seed, False, "poh10")


def ica_poh11(traces: RgbTraces, cfg: ExtractorConfig | None = None, seed: int = 0) -> Waveform:
    """ICA variant with detrending and 5-point smoothing around separation."""
    return _ica_extract(traces, cfg or ExtractorConfig(), seed, True, "poh11")


EXTRACTORS = {
    "chrom": chrom,
    "pos": pos,
    "poh10": ica_poh10,
    "poh11": ica_poh11,
}


def run_extractor(name: str, traces: RgbTraces, cfg: ExtractorConfig | None = None, seed: int = 0) -> Waveform:
    if name not in EXTRACTORS:
        raise ValueError(f"unknown extractor {name!r}; choose from {sorted(EXTRACTORS)}")
    if name.startswith("poh"):
        return EXTRACTORS[name](traces, cfg, seed=seed)
    return EXTRACTORS[name](traces, cfg)
