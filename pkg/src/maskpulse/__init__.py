"""maskpulse: remote pulse estimation from face video with synthetic masks."""

__version__ = "0.1.0"

from .ingest import FrameSequence, LandmarkTrack, Waveform
from .roi import BBox, CroppedSequence, bbox_from_landmarks, crop_resize, crop_sequence
from .masks import MaskSpec, SimTransform, estimate_similarity, mask_sequence
from .extract import (
    ExtractorConfig,
    RgbTraces,
    bandpass,
    chrom,
    detrend,
    ica_poh10,
    ica_poh11,
    pos,
    spatial_average,
)
from .waveform import (
    ClipWindow,
    LagEstimate,
    clip_scale,
    estimate_phase_shift,
    overlap_add,
    resample_cubic,
    shift,
)
from .metrics import (
    HrSeries,
    MetricReport,
    error_metrics,
    estimate_hr,
    fuse_ground_truth,
    windowed_waveform_corr,
)
from .oracle import OracleSpec, gen_bvp, gen_video

__all__ = [
    "FrameSequence",
    "LandmarkTrack",
    "Waveform",
    "BBox",
    "CroppedSequence",
    "bbox_from_landmarks",
    "crop_resize",
    "crop_sequence",
    "MaskSpec",
    "SimTransform",
    "estimate_similarity",
    "mask_sequence",
    "ExtractorConfig",
    "RgbTraces",
    "bandpass",
    "chrom",
    "detrend",
    "ica_poh10",
    "ica_poh11",
    "pos",
    "spatial_average",
    "ClipWindow",
    "LagEstimate",
    "clip_scale",
    "estimate_phase_shift",
    "overlap_add",
    "resample_cubic",
    "shift",
    "HrSeries",
    "MetricReport",
    "error_metrics",
    "estimate_hr",
    "fuse_ground_truth",
    "windowed_waveform_corr",
    "OracleSpec",
    "gen_bvp",
    "gen_video",
]
