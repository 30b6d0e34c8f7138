"""Acceptance gate: every criterion prints one [PASS]/[FAIL] line.

Run with `pytest tests/test_acceptance.py -v -s`.
"""

import time

import numpy as np
import pytest

from maskpulse.extract import EXTRACTORS, bandpass, detrend, run_extractor, spatial_average
from maskpulse.ingest import Waveform
from maskpulse.masks import DEFAULT_MASK_INDICES, MaskSpec, estimate_similarity, mask_sequence, apply_mask_frame, prepare_pattern
from maskpulse.metrics import HrSeries, error_metrics, estimate_hr
from maskpulse.oracle import OracleSpec, face_landmark_layout, gen_bvp, gen_video, pulse_phase, pulse_value
from maskpulse.roi import crop_sequence, track_to_crop_coords
from maskpulse.seeding import derive_seed
from maskpulse.waveform import ClipWindow, estimate_phase_shift, overlap_add, resample_cubic, window_starts
from maskpulse.kernels import fill_polygon

from test_metrics import brute_force_metrics

HEART_RATES = (48.0, 72.0, 120.0, 160.0)
ALGOS = tuple(EXTRACTORS)
FPS = 90.0
NFFT = 1 << 14


def _report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _dominant_bin(values, fs):
    spec = np.abs(np.fft.rfft(values - values.mean(), n=NFFT))
    freqs = np.fft.rfftfreq(NFFT, 1.0 / fs)
    sel = (freqs >= 2 / 3) & (freqs <= 3.0)
    return int(np.argmax(spec[sel]))


def _trace_snr(g, fs):
    """In-band pulse RMS over out-of-band noise RMS of a raw trace."""
    return float(bandpass(g, 2 / 3, 3.0, fs).std() / bandpass(g, 5.0, 20.0, fs).std())


@pytest.fixture(scope="module")
def hr_recovery_runs():
    """60 s oracle videos at the acceptance SNR, unmasked (timed) and with
    the default black mask (untimed)."""
    results = {}
    timed_s = 0.0
    for hr in HEART_RATES:
        spec = OracleSpec(
            duration_s=60.0,
            fps=FPS,
            hr_profile=hr,
            pulse_amplitude=1.0,
            noise_sigma=2.0,
            illumination_drift=(2.0, 0.15),
            seed=1000 + int(hr),
        )
        t0 = time.perf_counter()
        seq, track, _ = gen_video(spec)
        cropped = crop_sequence(seq, track)
        traces = spatial_average(cropped)
        unmasked = {}
        bins = {}
        for algo in ALGOS:
            wave = run_extractor(algo, traces, seed=derive_seed(spec.seed, algo))
            series = estimate_hr(wave)
            unmasked[algo] = float(np.abs(series.bpm - hr).mean())
            bins[algo] = _dominant_bin(wave.values, FPS)
        timed_s += time.perf_counter() - t0

        del seq
        crop_track = track_to_crop_coords(track, cropped.boxes)
        masked_seq, applied = mask_sequence(cropped, crop_track, MaskSpec("black"))
        assert applied.all()
        del cropped
        mtraces = spatial_average(masked_seq)
        del masked_seq
        masked = {}
        for algo in ALGOS:
            wave = run_extractor(algo, mtraces, seed=derive_seed(spec.seed, algo))
            series = estimate_hr(wave)
            masked[algo] = float(np.abs(series.bpm - hr).mean())

        bvp_bin = _dominant_bin(gen_bvp(spec).values, FPS)
        results[hr] = {
            "unmasked": unmasked,
            "masked": masked,
            "bins": bins,
            "bvp_bin": bvp_bin,
            "snr": (_trace_snr(traces.g, FPS), _trace_snr(mtraces.g, FPS)),
        }
    return results, timed_s


def test_oracle_hr_recovery_unmasked(hr_recovery_runs):
    results, timed_s = hr_recovery_runs
    worst = {algo: max(results[hr]["unmasked"][algo] for hr in HEART_RATES) for algo in ALGOS}
    ok = (
        worst["chrom"] <= 1.0
        and worst["pos"] <= 1.0
        and worst["poh10"] <= 3.0
        and worst["poh11"] <= 3.0
        and timed_s <= 60.0
    )
    bins_ok = all(
        results[hr]["bins"][algo] == results[hr]["bvp_bin"]
        for hr in HEART_RATES
        for algo in ("chrom", "pos")
    )
    detail = (
        "worst MAE bpm "
        + " ".join(f"{a}={worst[a]:.3f}" for a in ALGOS)
        + f"; chrom/pos dominant bins exact={bins_ok}; runtime {timed_s:.1f}s <= 60s"
    )
    _report("oracle-hr-recovery-unmasked", ok and bins_ok, detail)


def test_masked_degradation_ordering(hr_recovery_runs):
    # Both MAEs sit at the HR estimator's quantization floor at this SNR, so
    # the ordering is asserted at the estimator's resolution (one padded-FFT
    # bin); the degradation direction itself is asserted strictly on the
    # un-quantized trace SNR.
    results, _ = hr_recovery_runs
    bin_bpm = FPS / NFFT * 60.0
    ordering_ok = all(
        results[hr]["masked"][algo] >= results[hr]["unmasked"][algo] - bin_bpm
        for hr in HEART_RATES
        for algo in ALGOS
    )
    snr_ok = all(results[hr]["snr"][1] < results[hr]["snr"][0] for hr in HEART_RATES)
    chrom_pos_ok = all(
        results[hr]["masked"][algo] <= 2.0 for hr in HEART_RATES for algo in ("chrom", "pos")
    )
    worst_masked = {a: max(results[hr]["masked"][a] for hr in HEART_RATES) for a in ALGOS}
    snr_drop = min(results[hr]["snr"][0] - results[hr]["snr"][1] for hr in HEART_RATES)
    detail = (
        f"MAE ordering within one bin ({bin_bpm:.3f} bpm): {ordering_ok}; "
        f"trace SNR strictly degraded at every rate: {snr_ok} (min drop {snr_drop:.3f}); "
        "masked worst MAE "
        + " ".join(f"{a}={worst_masked[a]:.3f}" for a in ALGOS)
    )
    _report("masked-degradation-ordering", ordering_ok and snr_ok and chrom_pos_ok, detail)


def test_phase_alignment_recovery():
    lags = (0.1, 0.25, 0.39)
    worst = 0.0
    failures = 0
    t90 = np.arange(int(40 * FPS)) / FPS
    t60 = np.arange(int(40 * 60.0)) / 60.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        lo = 64.0 + (seed % 5)
        spec = OracleSpec(duration_s=40.0, fps=FPS, hr_profile=[(0.0, lo), (40.0, lo + 12.0)])
        for lag in lags:
            ref = Waveform(
                pulse_value(pulse_phase(spec, t90)) + rng.normal(0, 0.05, len(t90)), t90, FPS
            )
            ox = Waveform(
                pulse_value(pulse_phase(spec, t60 - lag)) + rng.normal(0, 0.05, len(t60)),
                t60,
                60.0,
            )
            est = estimate_phase_shift(ref, resample_cubic(ox, t90))
            err = abs(est.lag_seconds - lag)
            worst = max(worst, err)
            if err > 1.0 / FPS + 1e-12:
                failures += 1
    _report(
        "phase-alignment-recovery",
        failures == 0,
        f"60 estimates (3 lags x 20 seeds), worst error {worst * 1000:.2f} ms <= {1000 / FPS:.2f} ms",
    )


def test_overlap_add_fidelity():
    spec = OracleSpec(duration_s=60.0, fps=FPS, hr_profile=72.0)
    bvp = gen_bvp(spec).values
    n = len(bvp)
    length = 135
    starts = window_starts(n, length)
    strides = set(np.diff(starts).tolist())
    windows = [(ClipWindow(s, length), bvp[s : s + length]) for s in starts]
    stitched = overlap_add(windows, n, FPS)
    interior = slice(length, n - length)
    corr = float(np.corrcoef(stitched.values[interior], bvp[interior])[0, 1])
    _report(
        "overlap-add-fidelity",
        corr > 0.99 and strides <= {67, 68},
        f"strides {sorted(strides)}, interior correlation {corr:.4f} > 0.99",
    )


def test_mask_locality_and_transform_exactness():
    base = face_landmark_layout(64, 64)
    sel = list(DEFAULT_MASK_INDICES)
    bad_pixels = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        pts = base + rng.normal(0, 1.0, size=(68, 2))
        frame = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
        pattern = rng.integers(0, 256, size=(50, 70, 3), dtype=np.uint8)
        spec = MaskSpec("pattern", pattern, rng_seed=seed)
        anchored = prepare_pattern(pattern, pts, spec)
        out, applied = apply_mask_frame(frame, pts, spec, anchored)
        assert applied
        inside = fill_polygon(pts[sel], 64, 64)
        bad_pixels += int((out[~inside] != frame[~inside]).sum())

    worst_param_err = 0.0
    for seed in range(100):
        rng = np.random.default_rng(10_000 + seed)
        src = base[sel]
        scale = float(rng.uniform(0.8, 1.25))
        theta = float(rng.uniform(-0.3, 0.3))
        t = rng.uniform(-5, 5, size=2)
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        dst = scale * src @ rot.T + t
        est = estimate_similarity(src, dst)
        worst_param_err = max(
            worst_param_err,
            abs(est.scale - scale),
            abs(est.rotation - theta),
            abs(est.translation[0] - t[0]),
            abs(est.translation[1] - t[1]),
        )
    ok = bad_pixels == 0 and worst_param_err < 1e-6
    _report(
        "mask-locality-and-transforms",
        ok,
        f"100 pattern frames: {bad_pixels} pixels changed outside polygon; "
        f"100 analytic motions: worst parameter error {worst_param_err:.2e} < 1e-6",
    )


def test_metric_arithmetic_against_brute_force():
    rng = np.random.default_rng(99)
    worst = 0.0
    inequality_violations = 0
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        dt = 1.0 / FPS
        pred = HrSeries(rng.normal(90, 20, n), np.arange(n) * dt)
        gt = HrSeries(rng.normal(90, 20, n), np.arange(n) * dt)
        rep = error_metrics(pred, gt)
        me, mae, rmse, r = brute_force_metrics(pred.bpm, gt.bpm)
        worst = max(
            worst,
            abs(rep.me - me),
            abs(rep.mae - mae),
            abs(rep.rmse - rmse),
            abs(rep.r_f - r) if r is not None else 0.0,
        )
        if rep.mae < abs(rep.me) - 1e-12 or rep.rmse < rep.mae - 1e-12:
            inequality_violations += 1
    ok = worst < 1e-12 and inequality_violations == 0
    _report(
        "metric-arithmetic",
        ok,
        f"1000 random pairs: worst |delta| vs brute force {worst:.2e} < 1e-12; "
        f"mae>=|me| and rmse>=mae violations {inequality_violations}",
    )


def test_detrending_matches_dense_solve():
    rng = np.random.default_rng(5)
    worst = 0.0
    for n in (50, 500, 2000):
        for lam, fs in ((300.0, 30.0), (300.0, 90.0)):
            x = rng.normal(0, 1, n)
            lam_eff = lam * (fs / 30.0) ** 2
            d = np.diff(np.eye(n), 2, axis=0)
            dense = x - np.linalg.solve(np.eye(n) + lam_eff**2 * (d.T @ d), x)
            worst = max(worst, float(np.abs(detrend(x, lam, fs) - dense).max()))
    _report(
        "detrending-dense-oracle",
        worst < 1e-8,
        f"series up to n=2000, lambda_eff up to 2700: worst |delta| {worst:.2e} < 1e-8",
    )
