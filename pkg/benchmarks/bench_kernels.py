#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Usage: python3 benchmarks/bench_kernels.py [--reps N]
"""

import argparse
import time

import numpy as np

from maskpulse.kernels import _ref

try:
    from maskpulse.kernels import _core
except ImportError:
    _core = None

from maskpulse.masks import DEFAULT_MASK_INDICES
from maskpulse.oracle import face_landmark_layout


def timeit(fn, reps):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--reps", type=int, default=300)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    frame = rng.integers(0, 256, size=(96, 96, 3), dtype=np.uint8)
    box = (11.9, 12.9, 84.2, 85.2)  # a typical face box
    poly = np.ascontiguousarray(face_landmark_layout(64, 64)[list(DEFAULT_MASK_INDICES)])
    pattern = rng.random((64, 64, 3)) * 255.0
    xs = rng.uniform(0, 64, size=1500)
    ys = rng.uniform(0, 64, size=1500)

    cases = [
        ("bicubic_crop 96->64", lambda m: m.bicubic_crop(frame, *box, 64, 64)),
        ("fill_polygon 64x64", lambda m: m.fill_polygon(poly, 64, 64)),
        ("sample_bilinear 1500", lambda m: m.sample_bilinear(pattern, xs, ys)),
    ]

    print(f"{'kernel':24s} {'numpy':>12s} {'compiled':>12s} {'speedup':>8s}")
    for name, call in cases:
        t_ref = timeit(lambda: call(_ref), args.reps)
        if _core is None:
            print(f"{name:24s} {t_ref * 1e6:10.1f}us {'n/a':>12s} {'n/a':>8s}")
            continue
        t_core = timeit(lambda: call(_core), args.reps)
        print(
            f"{name:24s} {t_ref * 1e6:10.1f}us {t_core * 1e6:10.1f}us "
            f"{t_ref / t_core:7.1f}x"
        )

    # end-to-end flavor: crop a one-second 90 fps burst
    frames = rng.integers(0, 256, size=(90, 96, 96, 3), dtype=np.uint8)

    def crop_burst(m):
        for f in frames:
            m.bicubic_crop(f, *box, 64, 64)

    t_ref = timeit(lambda: crop_burst(_ref), max(args.reps // 30, 3))
    line = f"{'crop 90 frames (1 s)':24s} {t_ref * 1e3:10.1f}ms"
    if _core is not None:
        t_core = timeit(lambda: crop_burst(_core), max(args.reps // 30, 3))
        line += f" {t_core * 1e3:10.1f}ms {t_ref / t_core:7.1f}x"
    print(line)


if __name__ == "__main__":
    main()
