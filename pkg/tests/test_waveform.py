import numpy as np
import pytest

from maskpulse import waveform as wf
from maskpulse.ingest import Waveform
from maskpulse.oracle import OracleSpec, gen_bvp, pulse_phase, pulse_value


def _wave(values, fs, t0=0.0):
    values = np.asarray(values, dtype=np.float64)
    ts = t0 + np.arange(len(values)) / fs
    return Waveform(values, ts, fs)


def _pulse_train(duration, fs, seed, noise=0.05, hr=(66.0, 80.0)):
    """Harmonic pulse with a drifting rate; broadband enough to be
    unambiguous within +/- 1 s."""
    spec = OracleSpec(
        duration_s=duration, fps=fs, hr_profile=[(0.0, hr[0]), (duration, hr[1])], seed=seed
    )
    base = gen_bvp(spec)
    rng = np.random.default_rng(seed)
    return Waveform(base.values + rng.normal(0, noise, len(base)), base.timestamps, fs)


# -- window starts -------------------------------------------------------------


def test_window_starts_floor_stride():
    assert wf.window_starts(270, 135) == [0, 67, 135]
    assert wf.window_starts(135, 135) == [0]
    # tail window appended when floored strides fall short
    starts = wf.window_starts(271, 135)
    assert starts == [0, 67, 135, 136]
    assert all(s + 135 <= 271 for s in starts)


# -- resampling ----------------------------------------------------------------


def test_resample_identity_at_knots():
    rng = np.random.default_rng(0)
    w = _wave(rng.random(50), 60.0)
    out = wf.resample_cubic(w, w.timestamps)
    np.testing.assert_allclose(out.values, w.values, atol=1e-12)


def test_resample_sine_60_to_90():
    # 3 cycles of 1.2 Hz in exactly 2.5 s: curvature vanishes at both ends,
    # matching the natural boundary condition
    t60 = np.arange(151) / 60.0
    w = Waveform(np.sin(2 * np.pi * 1.2 * t60), t60, 60.0)
    t90 = np.arange(int(2.5 * 90) + 1) / 90.0
    out = wf.resample_cubic(w, t90)
    np.testing.assert_allclose(out.values, np.sin(2 * np.pi * 1.2 * t90), atol=1e-3)
    assert out.fs == pytest.approx(90.0)


def test_resample_reproduces_linear():
    t = np.arange(30) / 10.0
    w = Waveform(2.5 * t - 1.0, t, 10.0)
    target = np.linspace(0.0, 2.9, 97)
    out = wf.resample_cubic(w, target)
    np.testing.assert_allclose(out.values, 2.5 * target - 1.0, atol=1e-9)


def test_resample_needs_four_samples():
    w = _wave([1.0, 2.0, 3.0], 10.0)
    with pytest.raises(ValueError, match="4 source samples"):
        wf.resample_cubic(w, w.timestamps)


# -- phase shift ---------------------------------------------------------------


def test_phase_shift_zero_for_identical():
    w = _pulse_train(25.0, 90.0, seed=1)
    est = wf.estimate_phase_shift(w, w)
    assert est.lag_samples == 0
    assert est.lag_seconds == 0.0


def test_phase_shift_constructed_delay():
    fs = 90.0
    delay = 0.30
    spec = OracleSpec(duration_s=35.0, fps=fs, hr_profile=[(0.0, 66.0), (35.0, 80.0)])
    t = np.arange(int(35.0 * fs)) / fs
    rng = np.random.default_rng(3)
    ref = Waveform(pulse_value(pulse_phase(spec, t)) + rng.normal(0, 0.05, len(t)), t, fs)
    tgt = Waveform(
        pulse_value(pulse_phase(spec, t - delay)) + rng.normal(0, 0.05, len(t)), t, fs
    )
    est = wf.estimate_phase_shift(ref, tgt)
    assert abs(est.lag_seconds - delay) <= 1.0 / fs + 1e-12
    assert abs(est.lag_seconds) <= 1.0


def test_phase_shift_pure_sine_ambiguous_modulo_period():
    fs = 90.0
    freq = 1.2  # period 0.8333 s, well within the +/- 1 s search
    t = np.arange(int(30 * fs)) / fs
    delay = 0.30
    ref = Waveform(np.sin(2 * np.pi * freq * t), t, fs)
    tgt = Waveform(np.sin(2 * np.pi * freq * (t - delay)), t, fs)
    est = wf.estimate_phase_shift(ref, tgt)
    period = 1.0 / freq
    residual = (est.lag_seconds - delay) % period
    residual = min(residual, period - residual)
    assert residual <= 1.5 / fs


def test_phase_shift_span_too_short():
    w = _pulse_train(5.0, 90.0, seed=2)
    with pytest.raises(ValueError, match="shorter than"):
        wf.estimate_phase_shift(w, w)


def test_phase_shift_all_windows_constant():
    w = _wave(np.full(2000, 3.0), 90.0)
    with pytest.raises(ValueError, match="zero variance"):
        wf.estimate_phase_shift(w, w, window_s=10.0)


# -- shift ---------------------------------------------------------------------


def test_shift_zero_identity():
    w = _pulse_train(12.0, 90.0, seed=4)
    out = wf.shift(w, 0)
    assert (out.values == w.values).all()
    assert (out.timestamps == w.timestamps).all()


def test_shift_roundtrip_recovers_center():
    w = _pulse_train(12.0, 90.0, seed=5)
    out = wf.shift(wf.shift(w, 5), -5)
    np.testing.assert_array_equal(out.values, w.values[5:-5])
    np.testing.assert_array_equal(out.timestamps, w.timestamps[5:-5])


def test_shift_improves_alignment():
    fs = 90.0
    ref = _pulse_train(30.0, fs, seed=6, noise=0.02)
    tgt = Waveform(np.roll(ref.values, 20), ref.timestamps, fs)  # delayed copy
    est = wf.estimate_phase_shift(ref, tgt, window_s=10.0)
    shifted = wf.shift(tgt, est.lag_samples)
    n = len(shifted)
    before = np.corrcoef(ref.values[:n], tgt.values[:n])[0, 1]
    after = np.corrcoef(ref.values[:n], shifted.values)[0, 1]
    assert after > before


def test_shift_overrun():
    w = _wave(np.arange(10.0), 10.0)
    with pytest.raises(ValueError, match=">="):
        wf.shift(w, 10)


def test_phase_shift_inverse_of_shift():
    fs = 90.0
    failures = 0
    for seed, k in [(s, k) for s in range(10) for k in (-60, 25)]:
        w = _pulse_train(32.0, fs, seed=seed, noise=0.1)
        est = wf.estimate_phase_shift(w, wf.shift(w, k), window_s=10.0)
        if est.lag_samples != -k:
            failures += 1
    assert failures == 0


# -- clip scaling ---------------------------------------------------------------


def test_clip_scale_examples():
    np.testing.assert_allclose(wf.clip_scale([1.0, 3.0, 2.0]), [0.0, 1.0, 0.5])
    np.testing.assert_allclose(wf.clip_scale([7.0, 7.0, 7.0]), [0.5, 0.5, 0.5])


def test_clip_scale_range_and_idempotence():
    rng = np.random.default_rng(7)
    for _ in range(50):
        clip = rng.normal(0, 10, size=rng.integers(2, 200))
        out = wf.clip_scale(clip)
        assert out.min() == 0.0
        assert out.max() == 1.0
        np.testing.assert_allclose(wf.clip_scale(out), out, atol=1e-12)


# -- overlap-add ----------------------------------------------------------------


def test_overlap_add_single_window():
    rng = np.random.default_rng(8)
    x = rng.random(100)
    out = wf.overlap_add([(wf.ClipWindow(0, 100), x)], 100, fs=90.0)
    expected = wf.zscore(x) * wf.hann_periodic(100)
    np.testing.assert_allclose(out.values, expected, atol=1e-12)


def test_overlap_add_reconstructs_sine():
    fs = 90.0
    n = 5400
    t = np.arange(n) / fs
    sine = np.sin(2 * np.pi * 1.2 * t)
    length = 135
    windows = [
        (wf.ClipWindow(s, length), sine[s : s + length])
        for s in wf.window_starts(n, length)
    ]
    out = wf.overlap_add(windows, n, fs)
    interior = slice(length, n - length)
    corr = np.corrcoef(out.values[interior], sine[interior])[0, 1]
    assert corr > 0.99


def test_overlap_add_constant_windows_zero():
    length = 64
    windows = [
        (wf.ClipWindow(0, length), np.full(length, 5.0)),
        (wf.ClipWindow(32, length), np.full(length, 5.0)),
    ]
    out = wf.overlap_add(windows, 96, fs=90.0)
    assert (out.values == 0.0).all()


def test_overlap_add_gap_error():
    length = 64
    windows = [
        (wf.ClipWindow(0, length), np.ones(length)),
        (wf.ClipWindow(80, length), np.ones(length)),
    ]
    with pytest.raises(ValueError, match=r"gap in \[64, 80\)"):
        wf.overlap_add(windows, 144, fs=90.0)


def test_overlap_add_length_and_interior_weight():
    length = 128  # even: exact unit overlap at 50% stride
    n = 1024
    windows = [
        (wf.ClipWindow(s, length), np.ones(length) + np.sin(np.arange(length)))
        for s in range(0, n - length + 1, length // 2)
    ]
    out = wf.overlap_add(windows, n, fs=90.0)
    assert len(out) == n
    weights = np.zeros(n)
    taper = wf.hann_periodic(length)
    for s in range(0, n - length + 1, length // 2):
        weights[s : s + length] += taper
    interior = slice(length // 2, n - length // 2)
    assert np.ptp(weights[interior]) < 1e-6


def test_moving_average_edges():
    x = np.arange(10.0)
    out = wf.moving_average(x, 5)
    assert out[0] == pytest.approx(np.mean(x[:3]))
    assert out[5] == pytest.approx(np.mean(x[3:8]))
    assert out[-1] == pytest.approx(np.mean(x[7:]))
