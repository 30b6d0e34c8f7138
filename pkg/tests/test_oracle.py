import numpy as np
import pytest

from maskpulse import oracle
from maskpulse.extract import bandpass, spatial_average
from maskpulse.metrics import estimate_hr
from maskpulse.oracle import OracleSpec, gen_bvp, gen_video
from maskpulse.waveform import estimate_phase_shift, resample_cubic


def test_bvp_cycle_count():
    wave = gen_bvp(OracleSpec(duration_s=10.0, hr_profile=72.0))
    s = wave.values
    # includes the crossing at t = 0 because s[0] == 0
    ups = int(np.sum((s[:-1] <= 0) & (s[1:] > 0)))
    assert ups == 12


def test_bvp_instantaneous_frequency_monotone():
    spec = OracleSpec(duration_s=40.0, hr_profile=[(0.0, 60.0), (40.0, 120.0)])
    wave = gen_bvp(spec)
    fs = spec.fps
    win = int(8 * fs)
    freqs = np.fft.rfftfreq(1 << 14, 1.0 / fs)
    sel = (freqs >= 2 / 3) & (freqs <= 3.0)
    peaks = []
    for s in range(0, len(wave) - win + 1, win // 2):
        seg = wave.values[s : s + win] * np.hamming(win)
        spec_mag = np.abs(np.fft.rfft(seg, n=1 << 14))
        peaks.append(freqs[sel][np.argmax(spec_mag[sel])])
    diffs = np.diff(peaks)
    assert (diffs >= -1e-9).all()
    assert peaks[-1] > peaks[0]


def test_bvp_amplitude_linearity():
    a = gen_bvp(OracleSpec(duration_s=5.0, pulse_amplitude=1.0, seed=1))
    b = gen_bvp(OracleSpec(duration_s=5.0, pulse_amplitude=3.5, seed=1))
    np.testing.assert_allclose(b.values, 3.5 * a.values, rtol=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError, match="40"):
        OracleSpec(hr_profile=30.0)
    with pytest.raises(ValueError, match="fps"):
        OracleSpec(hr_profile=170.0, fps=5.0)
    with pytest.raises(ValueError, match="amplitude"):
        OracleSpec(pulse_amplitude=0.0)


def test_video_noise_free_green_trace():
    spec = OracleSpec(
        duration_s=3.0, noise_sigma=0.0, illumination_drift=(0.0, 0.15), seed=4
    )
    seq, _, _ = gen_video(spec)
    traces = spatial_average(seq)
    bvp = gen_bvp(spec)
    expected = spec.skin_color[1] + spec.channel_gains[1] * bvp.values
    assert np.abs(traces.g - expected).max() < 0.5


def test_video_oximeter_lag_recovered():
    spec = OracleSpec(
        duration_s=30.0,
        hr_profile=[(0.0, 66.0), (30.0, 80.0)],
        oximeter_lag_s=0.3,
        frame_size=(32, 32),
        seed=6,
    )
    _, _, oximeter = gen_video(spec)
    bvp = gen_bvp(spec)
    ox90 = resample_cubic(oximeter, bvp.timestamps)
    est = estimate_phase_shift(bvp, ox90)
    assert abs(est.lag_seconds - 0.3) <= 1.0 / spec.fps + 1e-12


def test_video_deterministic():
    spec = OracleSpec(duration_s=2.0, frame_size=(32, 32), seed=11)
    a, ta, oxa = gen_video(spec)
    b, tb, oxb = gen_video(spec)
    assert (a.frames == b.frames).all()
    assert (ta.points == tb.points).all()
    assert (oxa.values == oxb.values).all()


def test_video_motion_moves_landmarks_only():
    spec = OracleSpec(duration_s=2.0, frame_size=(48, 48), motion_amp_px=3.0, seed=2)
    _, track, _ = gen_video(spec)
    spread = track.points[:, 0, 0].max() - track.points[:, 0, 0].min()
    assert spread > 1.0


def test_embedded_hr_recoverable_from_frames():
    spec = OracleSpec(duration_s=35.0, hr_profile=100.0, noise_sigma=2.0,
                      pulse_amplitude=1.0, seed=7)
    seq, track, _ = gen_video(spec)
    from maskpulse.roi import crop_sequence

    cropped = crop_sequence(seq, track)
    traces = spatial_average(cropped)
    wave = bandpass(traces.g, 2 / 3, 3.0, traces.fs)
    from maskpulse.ingest import Waveform

    hr = estimate_hr(Waveform(wave, traces.timestamps, traces.fs))
    bin_bpm = traces.fs / (1 << 14) * 60.0
    assert np.abs(hr.bpm - 100.0).max() <= bin_bpm


def test_spec_json_roundtrip(tmp_path):
    spec = OracleSpec(
        duration_s=12.0,
        hr_profile=[(0.0, 60.0), (12.0, 90.0)],
        frame_size=(48, 56),
        oximeter_lag_s=0.25,
        seed=9,
    )
    path = tmp_path / "spec.json"
    spec.to_json(path)
    loaded = OracleSpec.from_json(path)
    assert loaded == spec
