import pytest

from maskpulse.extract import spatial_average
from maskpulse.oracle import OracleSpec, gen_video
from maskpulse.roi import crop_sequence


@pytest.fixture(scope="session")
def oracle_traces_72():
    """Cropped-and-averaged traces of a 40 s, 72 bpm oracle recording."""
    spec = OracleSpec(duration_s=40.0, hr_profile=72.0, seed=3)
    seq, track, _ = gen_video(spec)
    cropped = crop_sequence(seq, track)
    return spatial_average(cropped), spec
