import numpy as np
import pytest
from scipy.signal import butter, sosfreqz

from maskpulse import extract
from maskpulse.extract import ExtractorConfig, RgbTraces
from maskpulse.oracle import OracleSpec, gen_bvp, gen_video
from maskpulse.roi import CroppedSequence, crop_sequence


def _traces(r, g, b, fs=90.0):
    n = len(r)
    t = np.arange(n) / fs
    return RgbTraces(np.asarray(r, float), np.asarray(g, float), np.asarray(b, float), t, fs)


def _const_traces(n=600, rgb=(150.0, 110.0, 85.0), fs=90.0):
    return _traces(np.full(n, rgb[0]), np.full(n, rgb[1]), np.full(n, rgb[2]), fs)


def _dominant_bin(values, fs, nfft=1 << 14):
    spec = np.abs(np.fft.rfft(values - values.mean(), n=nfft))
    freqs = np.fft.rfftfreq(nfft, 1.0 / fs)
    sel = (freqs >= 2 / 3) & (freqs <= 3.0)
    return int(np.argmax(spec[sel]))


def _oracle_traces(hr=72.0, seed=3, duration=40.0, **kw):
    spec = OracleSpec(duration_s=duration, hr_profile=hr, seed=seed, **kw)
    seq, track, _ = gen_video(spec)
    cropped = crop_sequence(seq, track)
    return extract.spatial_average(cropped), spec


# -- spatial averaging ----------------------------------------------------------


def test_spatial_average_constant():
    frames = np.empty((4, 64, 64, 3))
    frames[..., 0], frames[..., 1], frames[..., 2] = 10.0, 20.0, 30.0
    cropped = CroppedSequence(frames, np.arange(4) / 90.0, np.zeros((4, 4)))
    tr = extract.spatial_average(cropped)
    np.testing.assert_allclose([tr.r[0], tr.g[0], tr.b[0]], [10.0, 20.0, 30.0])


def test_spatial_average_masked_fraction():
    frames = np.full((3, 64, 64, 3), 100.0)
    frames[:, :16, :, :] = 0.0  # quarter of the pixels zeroed
    cropped = CroppedSequence(frames, np.arange(3) / 90.0, np.zeros((3, 4)))
    tr = extract.spatial_average(cropped)
    np.testing.assert_allclose(tr.g, 75.0, rtol=1e-12)


def test_spatial_average_pixel_mask_hook():
    frames = np.full((2, 64, 64, 3), 50.0)
    frames[:, :32] = 10.0
    cropped = CroppedSequence(frames, np.arange(2) / 90.0, np.zeros((2, 4)))
    mask = np.zeros((64, 64), dtype=bool)
    mask[32:] = True
    tr = extract.spatial_average(cropped, pixel_mask=mask)
    np.testing.assert_allclose(tr.r, 50.0)


def test_spatial_average_matches_injected_trace():
    spec = OracleSpec(duration_s=4.0, noise_sigma=0.0, illumination_drift=(0.0, 0.15), seed=2)
    seq, track, _ = gen_video(spec)
    tr = extract.spatial_average(seq)
    bvp = gen_bvp(spec)
    expected = spec.skin_color[1] + spec.channel_gains[1] * bvp.values
    assert np.abs(tr.g - expected).max() < 0.5


# -- detrending -----------------------------------------------------------------


def _dense_detrend(x, lam_eff):
    n = len(x)
    d = np.diff(np.eye(n), 2, axis=0)
    a = np.eye(n) + lam_eff**2 * (d.T @ d)
    return x - np.linalg.solve(a, x)


def test_detrend_constant_zero():
    out = extract.detrend(np.full(200, 4.2), 300.0, 30.0)
    assert np.abs(out).max() < 1e-8


def test_detrend_linear_ramp():
    ramp = np.linspace(0.0, 5.0, 400)
    out = extract.detrend(ramp, 300.0, 30.0)
    assert np.abs(out[10:-10]).max() < 1e-6 * 5.0


def test_detrend_matches_dense_solver():
    rng = np.random.default_rng(0)
    for n, lam, fs in [(50, 300.0, 30.0), (333, 10.0, 30.0), (1200, 300.0, 90.0)]:
        x = rng.normal(0, 1, n)
        out = extract.detrend(x, lam, fs)
        ref = _dense_detrend(x, lam * (fs / 30.0) ** 2)
        assert np.abs(out - ref).max() < 1e-8


def test_detrend_recovers_sine_under_drift():
    fs = 90.0
    t = np.arange(int(20 * fs)) / fs
    sine = np.sin(2 * np.pi * 1.2 * t)
    out = extract.detrend(sine + 3.0 * t + 5.0, 300.0, fs)
    corr = np.corrcoef(out, sine)[0, 1]
    assert corr > 0.99


def test_detrend_rejects_bad_input():
    with pytest.raises(ValueError, match="3 samples"):
        extract.detrend(np.ones(2))
    with pytest.raises(ValueError, match="finite"):
        extract.detrend(np.array([1.0, np.nan, 2.0]))


# -- band-pass ------------------------------------------------------------------


def test_bandpass_removes_dc():
    out = extract.bandpass(np.full(900, 7.0), 2 / 3, 3.0, 90.0)
    assert np.abs(out).max() < 1e-8


def _analytic_filtfilt_gain(freq, f_lo, f_hi, fs, order=4):
    sos = butter(order, [f_lo, f_hi], btype="bandpass", fs=fs, output="sos")
    _, h = sosfreqz(sos, worN=[2 * np.pi * freq / fs])
    return np.abs(h[0]) ** 2  # forward-backward squares the magnitude


def test_bandpass_inband_gain_matches_analytic():
    fs = 90.0
    t = np.arange(int(40 * fs)) / fs
    x = np.sin(2 * np.pi * 1.5 * t)
    y = extract.bandpass(x, 2 / 3, 3.0, fs)
    measured = y[900:-900].std() / x[900:-900].std()
    expected = _analytic_filtfilt_gain(1.5, 2 / 3, 3.0, fs)
    assert measured == pytest.approx(expected, rel=0.02)
    assert measured > 0.98  # in-band amplitude essentially preserved


def test_bandpass_attenuates_out_of_band():
    fs = 90.0
    t = np.arange(int(60 * fs)) / fs
    x = np.sin(2 * np.pi * 0.1 * t)
    y = extract.bandpass(x, 2 / 3, 3.0, fs)
    atten = y.std() / x.std()
    assert atten < 10 ** (-20 / 20)
    assert _analytic_filtfilt_gain(0.1, 2 / 3, 3.0, fs) < 10 ** (-20 / 20)


def test_bandpass_rejects_bad_band():
    with pytest.raises(ValueError, match="invalid"):
        extract.bandpass(np.ones(100), 2 / 3, 50.0, 90.0)


# -- chrom / pos ----------------------------------------------------------------


@pytest.mark.parametrize("algo", [extract.chrom, extract.pos])
def test_extractor_constant_traces_zero(algo):
    wave = algo(_const_traces())
    assert np.abs(wave.values).max() < 1e-9


@pytest.mark.parametrize("algo", [extract.chrom, extract.pos])
def test_extractor_recovers_oracle_frequency(algo, oracle_traces_72):
    traces, spec = oracle_traces_72
    wave = algo(traces)
    bvp = gen_bvp(spec)
    assert _dominant_bin(wave.values, traces.fs) == _dominant_bin(bvp.values, bvp.fs)


@pytest.mark.parametrize("name", ["chrom", "pos", "poh10", "poh11"])
def test_extractor_illumination_scale_invariance(name, oracle_traces_72):
    traces, _ = oracle_traces_72
    out1 = extract.run_extractor(name, traces, seed=5)
    for k in (0.5, 2.0):
        scaled = RgbTraces(
            k * traces.r, k * traces.g, k * traces.b, traces.timestamps, traces.fs
        )
        out2 = extract.run_extractor(name, scaled, seed=5)
        if name in ("chrom", "pos"):
            np.testing.assert_allclose(out2.values, out1.values, atol=1e-6)
        corr = np.corrcoef(out1.values, out2.values)[0, 1]
        assert abs(corr - 1.0) < 1e-3


@pytest.mark.parametrize("name", ["chrom", "pos", "poh10", "poh11"])
def test_extractor_zero_mean(name, oracle_traces_72):
    traces, _ = oracle_traces_72
    wave = extract.run_extractor(name, traces, seed=1)
    assert abs(wave.values.mean()) < 1e-6


def test_extractors_too_short():
    tr = _const_traces(n=100)
    with pytest.raises(ValueError):
        extract.chrom(tr)
    with pytest.raises(ValueError, match="256"):
        extract.ica_poh10(tr)


# -- ICA ------------------------------------------------------------------------


def _separable_traces(n=2048, fs=90.0, seed=0, drift=0.0):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / fs
    sine = np.sin(2 * np.pi * 1.2 * t)
    r = 0.2 * np.sin(2 * np.pi * 0.2 * t) + 0.05 * rng.normal(size=n)
    b = 0.2 * np.sin(2 * np.pi * 8.0 * t) + 0.05 * rng.normal(size=n)
    g = sine + drift * t
    return _traces(100 + r, 100 + g, 100 + b, fs), sine


def test_ica_selects_inband_component():
    traces, sine = _separable_traces(seed=1)
    wave = extract.ica_poh10(traces, seed=7)
    assert not wave.meta["fallback"]
    corr = np.corrcoef(wave.values, sine)[0, 1]
    assert corr > 0.99


def test_ica_channel_permutation_stability():
    traces, _ = _separable_traces(seed=2)
    out1 = extract.ica_poh10(traces, seed=3)
    shuffled = RgbTraces(traces.b, traces.r, traces.g, traces.timestamps, traces.fs)
    out2 = extract.ica_poh10(shuffled, seed=3)
    corr = np.corrcoef(out1.values, out2.values)[0, 1]
    assert abs(abs(corr) - 1.0) < 1e-3


def test_ica_constant_traces_fallback():
    wave = extract.ica_poh10(_const_traces(n=600))
    assert wave.meta["fallback"]
    wave = extract.ica_poh11(_const_traces(n=600))
    assert wave.meta["fallback"]


def test_ica_seeded_determinism():
    traces, _ = _separable_traces(seed=4)
    a = extract.ica_poh10(traces, seed=11)
    b = extract.ica_poh10(traces, seed=11)
    np.testing.assert_array_equal(a.values, b.values)


def _drifting_traces(seed, drift_amp=8.0, n=2048, fs=90.0):
    # a strong shared ramp in all channels: four effective sources in three
    # channels, so separation without detrending degrades
    rng = np.random.default_rng(seed)
    t = np.arange(n) / fs
    sine = np.sin(2 * np.pi * 1.2 * t)
    ramp = drift_amp * (t / t[-1])
    r = 100 + 0.4 * sine + 0.9 * ramp + 0.3 * np.sin(2 * np.pi * 0.25 * t) + 0.05 * rng.normal(size=n)
    g = 100 + 1.0 * sine + 1.0 * ramp + 0.05 * rng.normal(size=n)
    b = 100 + 0.6 * sine + 0.7 * ramp + 0.3 * np.sin(2 * np.pi * 8.0 * t) + 0.05 * rng.normal(size=n)
    return _traces(r, g, b, fs), sine


@pytest.mark.parametrize("seed", [0, 3, 5])
def test_poh11_beats_poh10_under_drift(seed):
    traces, sine = _drifting_traces(seed)
    w10 = extract.ica_poh10(traces, seed=1)
    w11 = extract.ica_poh11(traces, seed=1)
    c10 = abs(np.corrcoef(w10.values, sine)[0, 1])
    c11 = abs(np.corrcoef(w11.values, sine)[0, 1])
    assert c11 > c10


def test_poh11_close_to_poh10_without_drift():
    traces, _ = _separable_traces(seed=6)
    w10 = extract.ica_poh10(traces, seed=2)
    w11 = extract.ica_poh11(traces, seed=2)
    corr = np.corrcoef(w10.values, w11.values)[0, 1]
    assert corr > 0.98


def test_config_validation():
    with pytest.raises(ValueError, match="f_lo"):
        ExtractorConfig(bandpass=(3.0, 2.0))
    cfg = ExtractorConfig()
    with pytest.raises(ValueError, match="Nyquist"):
        cfg.validate_for(5.0)
