"""Synthetic face videos with a known embedded pulse.

Every frame is a flat skin-colored field carrying the pulse in all pixels,
plus a shared low-frequency illumination drift and i.i.d. pixel noise,
quantized to 8 bits with stochastic rounding so sub-LSB pulse amplitudes
survive spatial averaging. A fixed 68-point synthetic landmark layout (with
optional sinusoidal translation) drives the cropping stage, and an
oximeter-style ground truth is emitted at its own rate with a configurable
lag. Everything is deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .ingest import FrameSequence, LandmarkTrack, Waveform
from .seeding import derive_seed

_HARMONIC_GAIN = 0.3  # dicrotic-notch-like second harmonic


@dataclass
class OracleSpec:
    duration_s: float = 60.0
    fps: float = 90.0
    # constant bpm, or [(t, bpm), ...] breakpoints interpolated linearly
    hr_profile: object = 72.0
    pulse_amplitude: float = 1.0
    channel_gains: tuple = (0.4, 1.0, 0.6)
    noise_sigma: float = 2.0
    illumination_drift: tuple = (2.0, 0.15)  # (sigma LSB, cutoff Hz)
    skin_color: tuple = (150.0, 110.0, 85.0)
    frame_size: tuple = (96, 96)  # (height, width)
    motion_amp_px: float = 0.0
    motion_freq_hz: float = 0.25
    oximeter_fs: float = 60.0
    oximeter_lag_s: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.pulse_amplitude <= 0:
            raise ValueError("pulse_amplitude must be > 0")
        bpms = self.hr_breakpoints()[:, 1]
        if (bpms < 40).any() or (bpms > 180).any():
            raise ValueError("hr_profile values must stay within [40, 180] bpm")
        if self.fps <= 2.0 * bpms.max() / 60.0:
            raise ValueError("fps must exceed twice the maximum pulse frequency")

    def hr_breakpoints(self) -> np.ndarray:
        """(k, 2) array of (t, bpm) breakpoints; constant profiles get one row."""
        if np.isscalar(self.hr_profile):
            return np.array([[0.0, float(self.hr_profile)]])
        pts = np.asarray(self.hr_profile, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("hr_profile must be a scalar or a list of (t, bpm)")
        if (np.diff(pts[:, 0]) <= 0).any():
            raise ValueError("hr_profile breakpoints must have increasing times")
        return pts

    def to_json(self, path) -> None:
        doc = {
            "duration_s": self.duration_s,
            "fps": self.fps,
            "hr_profile": self.hr_profile
            if np.isscalar(self.hr_profile)
            else [list(p) for p in self.hr_profile],
            "pulse_amplitude": self.pulse_amplitude,
            "channel_gains": list(self.channel_gains),
            "noise_sigma": self.noise_sigma,
            "illumination_drift": list(self.illumination_drift),
            "skin_color": list(self.skin_color),
            "frame_size": list(self.frame_size),
            "motion_amp_px": self.motion_amp_px,
            "motion_freq_hz": self.motion_freq_hz,
            "oximeter_fs": self.oximeter_fs,
            "oximeter_lag_s": self.oximeter_lag_s,
            "seed": self.seed,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "OracleSpec":
        with open(path) as fh:
            doc = json.load(fh)
        kwargs = dict(doc)
        for key in ("channel_gains", "illumination_drift", "skin_color", "frame_size"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        if isinstance(kwargs.get("hr_profile"), list):
            kwargs["hr_profile"] = [tuple(p) for p in kwargs["hr_profile"]]
        return cls(**kwargs)


def pulse_phase(spec: OracleSpec, t) -> np.ndarray:
    """Exact integral of hr(tau)/60 over [0, t] for the piecewise-linear
    profile, evaluated at arbitrary (possibly negative) times."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    pts = spec.hr_breakpoints()
    if len(pts) == 1:
        return pts[0, 1] / 60.0 * t

    times = pts[:, 0]
    bpms = pts[:, 1]
    # cumulative phase at each breakpoint
    seg = np.diff(times) * 0.5 * (bpms[:-1] + bpms[1:]) / 60.0
    phase_at = np.concatenate([[0.0], np.cumsum(seg)])

    idx = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2)
    t0 = times[idx]
    h0 = bpms[idx]
    slope = (bpms[idx + 1] - h0) / (times[idx + 1] - t0)
    dt = t - t0
    phase = phase_at[idx] + (h0 * dt + 0.5 * slope * dt * dt) / 60.0
    # clamp-extend the profile outside its breakpoints
    before = t < times[0]
    after = t > times[-1]
    phase[before] = bpms[0] / 60.0 * (t[before] - times[0])
    phase[after] = phase_at[-1] + bpms[-1] / 60.0 * (t[after] - times[-1])
    return phase


def pulse_value(phase) -> np.ndarray:
    return np.sin(2.0 * np.pi * phase) + _HARMONIC_GAIN * np.sin(4.0 * np.pi * phase)


def gen_bvp(spec: OracleSpec) -> Waveform:
    """Reference pulse waveform sampled at the video rate."""
    n = int(round(spec.duration_s * spec.fps))
    t = np.arange(n) / spec.fps
    values = spec.pulse_amplitude * pulse_value(pulse_phase(spec, t))
    return Waveform(values, t, spec.fps, meta={"kind": "bvp"})


def face_landmark_layout(height: int, width: int) -> np.ndarray:
    """Fixed 68-point face-shaped layout inside a (height, width) frame."""
    cx, cy = 0.5 * width, 0.5 * height
    a, b = 0.30 * width, 0.36 * height
    pts = np.zeros((68, 2))

    theta = np.pi * np.arange(17) / 16.0  # jaw: left ear -> chin -> right ear
    pts[0:17, 0] = cx - a * np.cos(theta)
    pts[0:17, 1] = cy + b * np.sin(theta)

    for side, rng in ((-1, range(17, 22)), (1, range(22, 27))):
        xs = np.linspace(0.15, 0.80, 5)[:: side if side > 0 else -1]
        for k, i in enumerate(rng):
            pts[i] = (cx + side * xs[k] * a, cy - 0.55 * b)

    pts[27] = (cx, cy - 0.45 * b)
    pts[28] = (cx, cy - 0.28 * b)
    pts[29] = (cx, cy - 0.10 * b)
    pts[30] = (cx, cy + 0.05 * b)
    for k in range(5):  # nostril row
        pts[31 + k] = (cx + (k - 2) * 0.08 * a, cy + 0.16 * b)

    for side, base in ((-1, 36), (1, 42)):
        ex, ey = cx + side * 0.45 * a, cy - 0.30 * b
        ang = np.pi * np.arange(6) / 3.0
        pts[base : base + 6, 0] = ex + 0.15 * a * np.cos(ang)
        pts[base : base + 6, 1] = ey + 0.08 * b * np.sin(ang)

    ang = 2.0 * np.pi * np.arange(12) / 12.0
    pts[48:60, 0] = cx + 0.28 * a * np.cos(ang)
    pts[48:60, 1] = cy + 0.55 * b + 0.12 * b * np.sin(ang)
    ang = 2.0 * np.pi * np.arange(8) / 8.0
    pts[60:68, 0] = cx + 0.15 * a * np.cos(ang)
    pts[60:68, 1] = cy + 0.55 * b + 0.05 * b * np.sin(ang)
    return pts


def _drift_signal(n, fs, sigma, cutoff, seed):
    if sigma <= 0.0 or n < 30:
        return np.zeros(n)
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(n)
    sos = butter(4, cutoff, btype="low", fs=fs, output="sos")
    slow = sosfiltfilt(sos, white)
    sd = slow.std()
    if sd == 0.0:
        return np.zeros(n)
    return slow * (sigma / sd)


def gen_video(spec: OracleSpec):
    """Render the oracle video.

    Returns (FrameSequence, LandmarkTrack, oximeter Waveform); the oximeter
    trace is the pulse evaluated at its own rate, delayed by
    ``oximeter_lag_s``.
    """
    h, w = spec.frame_size
    n = int(round(spec.duration_s * spec.fps))
    t = np.arange(n) / spec.fps

    bvp = spec.pulse_amplitude * pulse_value(pulse_phase(spec, t))
    drift_sigma, drift_cutoff = spec.illumination_drift
    drift = _drift_signal(n, spec.fps, drift_sigma, drift_cutoff, derive_seed(spec.seed, "drift"))

    gains = np.asarray(spec.channel_gains, dtype=np.float32)
    skin = np.asarray(spec.skin_color, dtype=np.float32)
    rng = np.random.default_rng(derive_seed(spec.seed, "pixels"))

    frames = np.empty((n, h, w, 3), dtype=np.uint8)
    chunk = max(1, int(2e7 // (h * w * 3)))  # keep scratch buffers modest
    for s in range(0, n, chunk):
        e = min(s + chunk, n)
        base = skin[None, None, None, :] + (
            bvp[s:e, None] * gains[None, :] + drift[s:e, None]
        ).astype(np.float32)[:, None, None, :]
        shape = (e - s, h, w, 3)
        if spec.noise_sigma > 0:
            vals = rng.standard_normal(shape, dtype=np.float32)
            vals *= np.float32(spec.noise_sigma)
            vals += base
        else:
            vals = np.broadcast_to(base, shape).copy()
        vals += rng.random(shape, dtype=np.float32)  # stochastic rounding
        np.floor(vals, out=vals)
        np.clip(vals, 0.0, 255.0, out=vals)
        frames[s:e] = vals.astype(np.uint8)

    base_pts = face_landmark_layout(h, w)
    points = np.broadcast_to(base_pts, (n, 68, 2)).copy()
    if spec.motion_amp_px > 0.0:
        offset = spec.motion_amp_px * np.column_stack(
            [
                np.sin(2.0 * np.pi * spec.motion_freq_hz * t),
                np.cos(2.0 * np.pi * spec.motion_freq_hz * t),
            ]
        )
        points += offset[:, None, :]
    track = LandmarkTrack(points, np.ones(n))

    n_ox = int(round(spec.duration_s * spec.oximeter_fs))
    t_ox = np.arange(n_ox) / spec.oximeter_fs
    ox_values = spec.pulse_amplitude * pulse_value(
        pulse_phase(spec, t_ox - spec.oximeter_lag_s)
    )
    oximeter = Waveform(ox_values, t_ox, spec.oximeter_fs, meta={"kind": "oximeter"})

    return FrameSequence(frames, t, spec.fps), track, oximeter
