"""Command-line entry point: synth, crop, mask, extract, align, stitch, hr,
eval, and the chained pipeline.

Every stage reads and writes the on-disk formats from ingest, so a chained
``pipeline`` run is bit-identical to running the stages by hand. All
randomness derives from one ``--seed`` through per-stage name hashes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
from PIL import Image

from . import __version__
from .extract import ExtractorConfig, run_extractor, spatial_average
from .ingest import (
    load_frames,
    load_landmarks,
    load_waveform,
    save_landmarks,
    save_waveform,
    Waveform,
)
from .masks import MaskSpec, mask_sequence
from .metrics import (
    HrSeries,
    error_metrics,
    estimate_hr,
    fuse_ground_truth,
    load_hr,
    save_hr,
    windowed_waveform_corr,
)
from .oracle import OracleSpec, gen_bvp, gen_video
from .roi import crop_sequence, load_cropped, save_cropped, track_to_crop_coords
from .seeding import derive_seed
from .waveform import ClipWindow, estimate_phase_shift, overlap_add, resample_cubic, shift

_IMAGE_EXTS = (".png", ".ppm", ".jpg", ".jpeg", ".bmp")


def _load_extractor_config(path) -> ExtractorConfig:
    if path is None:
        return ExtractorConfig()
    path = os.fspath(path)
    if path.endswith(".toml"):
        import tomllib

        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    else:
        with open(path) as fh:
            doc = json.load(fh)
    if "bandpass" in doc:
        doc["bandpass"] = tuple(doc["bandpass"])
    return ExtractorConfig(**doc)


# -- stage functions (shared by the subcommands and `pipeline`) ---------------


def stage_synth(spec: OracleSpec, out_dir, fmt="raw"):
    os.makedirs(out_dir, exist_ok=True)
    seq, track, oximeter = gen_video(spec)
    manifest = os.path.join(out_dir, "manifest.json")
    from .ingest import save_frames

    save_frames(seq, out_dir, fmt=fmt)
    landmarks = os.path.join(out_dir, "landmarks.csv")
    save_landmarks(track, landmarks)
    ox_path = os.path.join(out_dir, "oximeter.csv")
    save_waveform(oximeter, ox_path)
    bvp_path = os.path.join(out_dir, "bvp.csv")
    save_waveform(gen_bvp(spec), bvp_path)
    spec.to_json(os.path.join(out_dir, "oracle_spec.json"))
    return manifest, landmarks, ox_path, bvp_path


def stage_crop(frames_manifest, landmarks_csv, out_dir, fmt="raw", workers=1):
    seq = load_frames(frames_manifest)
    track = load_landmarks(landmarks_csv, len(seq))
    cropped = crop_sequence(seq, track, workers=workers)
    os.makedirs(out_dir, exist_ok=True)
    manifest = save_cropped(cropped, out_dir, fmt=fmt)
    crop_track = track_to_crop_coords(track, cropped.boxes)
    crop_landmarks = os.path.join(out_dir, "landmarks_crop.csv")
    save_landmarks(crop_track, crop_landmarks)
    return manifest, crop_landmarks


def _choose_pattern(pattern, pattern_dir, seed):
    if pattern:
        return os.fspath(pattern)
    if not pattern_dir:
        raise ValueError("pattern mode requires --pattern or --pattern-dir")
    names = sorted(
        f for f in os.listdir(pattern_dir) if f.lower().endswith(_IMAGE_EXTS)
    )
    if not names:
        raise ValueError(f"no pattern images found in {pattern_dir}")
    rng = np.random.default_rng(derive_seed(seed, "mask.pattern-choice"))
    return os.path.join(pattern_dir, names[int(rng.integers(len(names)))])


def stage_mask(crop_manifest, crop_landmarks, mode, out_dir, seed,
               pattern=None, pattern_dir=None, fmt="raw"):
    cropped = load_cropped(crop_manifest)
    track = load_landmarks(crop_landmarks, len(cropped))
    pattern_path = None
    pattern_image = None
    if mode == "pattern":
        pattern_path = _choose_pattern(pattern, pattern_dir, seed)
        pattern_image = np.asarray(Image.open(pattern_path).convert("RGB"), dtype=np.uint8)
    spec = MaskSpec(
        mode=mode,
        pattern_image=pattern_image,
        rng_seed=derive_seed(seed, "mask.translate"),
        pattern_path=pattern_path,
    )
    masked, applied = mask_sequence(cropped, track, spec)
    os.makedirs(out_dir, exist_ok=True)
    manifest = save_cropped(masked, out_dir, fmt=fmt)
    spec.to_json(os.path.join(out_dir, "mask_spec.json"))
    with open(os.path.join(out_dir, "applied.csv"), "w") as fh:
        fh.write("frame,applied\n")
        for i, flag in enumerate(applied):
            fh.write(f"{i},{int(flag)}\n")
    # the crop-coordinate landmarks pass through unchanged
    save_landmarks(track, os.path.join(out_dir, "landmarks_crop.csv"))
    return manifest


def stage_extract(crop_manifest, algo, out_path, cfg=None, seed=0):
    cropped = load_cropped(crop_manifest)
    traces = spatial_average(cropped)
    wave = run_extractor(algo, traces, cfg, seed=derive_seed(seed, "extract.ica"))
    save_waveform(wave, out_path)
    return out_path


def stage_align(ref_csv, target_csv, out_path, lag_path=None):
    ref = load_waveform(ref_csv)
    target = load_waveform(target_csv)
    if abs(target.fs - ref.fs) > 1e-6 * ref.fs:
        target = resample_cubic(target, ref.timestamps)
    est = estimate_phase_shift(ref, target)
    shifted = shift(target, est.lag_samples)
    save_waveform(shifted, out_path)
    record = {
        "lag_samples": est.lag_samples,
        "lag_seconds": est.lag_seconds,
        "score": est.score,
    }
    if lag_path:
        with open(lag_path, "w") as fh:
            json.dump(record, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return est, record


def stage_hr(wave_csv, out_path, window_s=30.0, hop=1):
    wave = load_waveform(wave_csv)
    series = estimate_hr(wave, window_s=window_s, hop=hop)
    save_hr(series, out_path)
    return out_path


def _overlap_by_timestamps(ts_a, ts_b):
    """Index slices of the shared timestamp range of two uniform grids."""
    if len(ts_a) == 0 or len(ts_b) == 0:
        raise ValueError("empty series")
    dt = np.median(np.diff(ts_a)) if len(ts_a) > 1 else 1.0
    t0 = max(ts_a[0], ts_b[0])
    t1 = min(ts_a[-1], ts_b[-1])
    if t1 < t0:
        raise ValueError("series do not overlap in time")
    a0 = int(np.searchsorted(ts_a, t0 - 0.5 * dt))
    b0 = int(np.searchsorted(ts_b, t0 - 0.5 * dt))
    n = min(len(ts_a) - a0, len(ts_b) - b0)
    return slice(a0, a0 + n), slice(b0, b0 + n)


def _trim_hr(a: HrSeries, b: HrSeries):
    sa, sb = _overlap_by_timestamps(a.timestamps, b.timestamps)
    return (
        HrSeries(a.bpm[sa], a.timestamps[sa], a.window_s),
        HrSeries(b.bpm[sb], b.timestamps[sb], b.window_s),
    )


def _trim_waveforms(a: Waveform, b: Waveform):
    sa, sb = _overlap_by_timestamps(a.timestamps, b.timestamps)
    return (
        Waveform(a.values[sa], a.timestamps[sa], a.fs),
        Waveform(b.values[sb], b.timestamps[sb], b.fs),
    )


def stage_eval(pred_csv, gt_csvs, out_path, hr_inputs=False, with_rt=True,
               window_s=30.0, hop=1):
    if hr_inputs:
        pred_hr = load_hr(pred_csv)
        gts = [load_hr(p) for p in gt_csvs]
        gt_hr = gts[0] if len(gts) == 1 else fuse_ground_truth(gts[0], gts[1])
        r_t = None
    else:
        pred_wave = load_waveform(pred_csv)
        gt_waves = [load_waveform(p) for p in gt_csvs]
        pred_hr = estimate_hr(pred_wave, window_s=window_s, hop=hop)
        gt_hrs = [estimate_hr(w, window_s=window_s, hop=hop) for w in gt_waves]
        if len(gt_hrs) == 2:
            gt_hrs = [g if len(g) == len(gt_hrs[0]) else _trim_hr(g, gt_hrs[0])[0] for g in gt_hrs]
            a, b = _trim_hr(gt_hrs[0], gt_hrs[1])
            gt_hr = fuse_ground_truth(a, b)
        else:
            gt_hr = gt_hrs[0]
        r_t = None
        if with_rt:
            wa, wb = _trim_waveforms(pred_wave, gt_waves[0])
            r_t, _, _ = windowed_waveform_corr(wa, wb)

    pa, ga = _trim_hr(pred_hr, gt_hr)
    report = error_metrics(pa, ga)
    report.r_t = r_t
    text = report.to_json()
    with open(out_path, "w") as fh:
        fh.write(text)
    return report, text


def stage_stitch(manifest_path, out_path):
    with open(manifest_path) as fh:
        doc = json.load(fh)
    base = os.path.dirname(os.fspath(manifest_path))
    total_len = int(doc["total_len"])
    fs = float(doc["fps"])
    windows = []
    for entry in doc["clips"]:
        wave = load_waveform(os.path.join(base, entry["path"]))
        windows.append((ClipWindow(int(entry["start"]), len(wave)), wave.values))
    stitched = overlap_add(windows, total_len, fs, t0=float(doc.get("t0", 0.0)))
    save_waveform(stitched, out_path)
    return out_path


# -- subcommand handlers -------------------------------------------------------


def cmd_synth(args):
    spec = OracleSpec.from_json(args.spec) if args.spec else OracleSpec()
    if args.seed is not None:
        spec.seed = derive_seed(args.seed, "synth")
    stage_synth(spec, args.out, fmt=args.frame_format)


def cmd_crop(args):
    stage_crop(args.frames, args.landmarks, args.out, fmt=args.frame_format,
               workers=args.workers)


def cmd_mask(args):
    if args.mask == "none":
        raise ValueError("mask subcommand requires --mask black or pattern")
    stage_mask(args.frames, args.landmarks, args.mask, args.out,
               args.seed if args.seed is not None else 0,
               pattern=args.pattern, pattern_dir=args.pattern_dir,
               fmt=args.frame_format)


def cmd_extract(args):
    cfg = _load_extractor_config(args.config)
    stage_extract(args.frames, args.algo, args.out, cfg,
                  seed=args.seed if args.seed is not None else 0)


def cmd_align(args):
    _, record = stage_align(args.ref, args.target, args.out, lag_path=args.lag_out)
    print(json.dumps(record, sort_keys=True))


def cmd_stitch(args):
    stage_stitch(args.manifest, args.out)


def cmd_hr(args):
    stage_hr(args.wave, args.out, window_s=args.window, hop=args.hop)


def cmd_eval(args):
    gts = [args.gt] + ([args.gt2] if args.gt2 else [])
    report, text = stage_eval(args.pred, gts, args.out, hr_inputs=args.hr,
                              with_rt=not args.no_rt, hop=args.hop)
    sys.stdout.write(text)


def cmd_pipeline(args):
    seed = args.seed if args.seed is not None else 0
    spec = OracleSpec.from_json(args.spec) if args.spec else OracleSpec()
    spec.seed = derive_seed(seed, "synth")
    out = args.out
    os.makedirs(out, exist_ok=True)
    fmt = args.frame_format

    synth_dir = os.path.join(out, "synth")
    manifest, landmarks, ox_path, _ = stage_synth(spec, synth_dir, fmt=fmt)

    crop_dir = os.path.join(out, "crop")
    crop_manifest, crop_landmarks = stage_crop(manifest, landmarks, crop_dir,
                                               fmt=fmt, workers=args.workers)

    extract_input = crop_manifest
    if args.mask != "none":
        mask_dir = os.path.join(out, "mask")
        extract_input = stage_mask(crop_manifest, crop_landmarks, args.mask,
                                   mask_dir, seed, pattern=args.pattern,
                                   pattern_dir=args.pattern_dir, fmt=fmt)

    pred_path = os.path.join(out, "pred.csv")
    cfg = _load_extractor_config(args.config)
    stage_extract(extract_input, args.algo, pred_path, cfg, seed=seed)

    gt_path = os.path.join(out, "gt_aligned.csv")
    stage_align(pred_path, ox_path, gt_path, lag_path=os.path.join(out, "lag.json"))

    report_path = os.path.join(out, "report.json")
    _, text = stage_eval(pred_path, [gt_path], report_path, hop=args.hop)
    sys.stdout.write(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="maskpulse",
        description="Remote pulse estimation pipeline with synthetic face masks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True, workers=False):
        if seed:
            p.add_argument("--seed", type=int, default=None, help="master seed")
        if workers:
            p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("synth", help="generate a synthetic oracle recording")
    p.add_argument("--spec", help="OracleSpec JSON (defaults used if omitted)")
    p.add_argument("--out", required=True)
    p.add_argument("--frame-format", choices=["png", "raw"], default="raw")
    add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("crop", help="landmark-driven 64x64 face crops")
    p.add_argument("--frames", required=True, help="frame manifest JSON")
    p.add_argument("--landmarks", required=True, help="landmark CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--frame-format", choices=["png", "raw"], default="raw")
    add_common(p, seed=False, workers=True)
    p.set_defaults(func=cmd_crop)

    p = sub.add_parser("mask", help="composite a synthetic mask over crops")
    p.add_argument("--frames", required=True, help="cropped manifest JSON")
    p.add_argument("--landmarks", required=True, help="crop-coordinate landmark CSV")
    p.add_argument("--mask", choices=["black", "pattern"], required=True)
    p.add_argument("--pattern", help="pattern image path")
    p.add_argument("--pattern-dir", help="directory to draw a pattern from")
    p.add_argument("--out", required=True)
    p.add_argument("--frame-format", choices=["png", "raw"], default="raw")
    add_common(p)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("extract", help="run a pulse extractor over crops")
    p.add_argument("--frames", required=True, help="cropped manifest JSON")
    p.add_argument("--algo", choices=["chrom", "pos", "poh10", "poh11"], required=True)
    p.add_argument("--config", help="ExtractorConfig JSON/TOML")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("align", help="phase-align a target waveform to a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lag-out", help="write the lag record JSON here")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("stitch", help="overlap-add per-clip prediction files")
    p.add_argument("--manifest", required=True, help="stitch manifest JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser("hr", help="waveform CSV -> heart-rate CSV")
    p.add_argument("--wave", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=float, default=30.0)
    p.add_argument("--hop", type=int, default=1)
    p.set_defaults(func=cmd_hr)

    p = sub.add_parser("eval", help="prediction + ground truth -> MetricReport JSON")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--gt2", help="second oximeter for fusion")
    p.add_argument("--hr", action="store_true", help="inputs are HR CSVs, not waveforms")
    p.add_argument("--no-rt", action="store_true", help="skip windowed waveform correlation")
    p.add_argument("--hop", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="synth -> crop -> [mask] -> extract -> align -> hr -> eval")
    p.add_argument("--spec", help="OracleSpec JSON")
    p.add_argument("--algo", choices=["chrom", "pos", "poh10", "poh11"], default="chrom")
    p.add_argument("--mask", choices=["none", "black", "pattern"], default="none")
    p.add_argument("--pattern", help="pattern image path")
    p.add_argument("--pattern-dir")
    p.add_argument("--config", help="ExtractorConfig JSON/TOML")
    p.add_argument("--out", required=True)
    p.add_argument("--frame-format", choices=["png", "raw"], default="raw")
    p.add_argument("--hop", type=int, default=1)
    add_common(p, workers=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, KeyError) as err:
        record = {"error": {"type": type(err).__name__, "message": str(err)}}
        sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
