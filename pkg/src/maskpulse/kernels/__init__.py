"""Pixel-sampling kernels with a compiled core and a NumPy fallback.

The Cython extension ``_core`` is preferred when importable; otherwise the
pure-NumPy twins in ``_ref`` are used. Selection can be forced through the
environment variable ``MASKPULSE_KERNELS``:

  auto (default)  compiled if available, else numpy
  compiled        require the extension, raise if missing
  numpy           force the fallback (used by the parity tests / benchmark)
"""

import importlib
import os

from . import _ref

_choice = os.environ.get("MASKPULSE_KERNELS", "auto").lower()
if _choice not in ("auto", "compiled", "numpy"):
    raise ValueError(f"unknown MASKPULSE_KERNELS value: {_choice!r}")

_impl = _ref
if _choice in ("auto", "compiled"):
    try:
        _impl = importlib.import_module("._core", __name__)
    except ImportError:
        if _choice == "compiled":
            raise ImportError(
                "MASKPULSE_KERNELS=compiled but maskpulse.kernels._core is not built"
            )

USING_COMPILED = _impl is not _ref

bicubic_crop = _impl.bicubic_crop
fill_polygon = _impl.fill_polygon
sample_bilinear = _impl.sample_bilinear

__all__ = ["bicubic_crop", "fill_polygon", "sample_bilinear", "USING_COMPILED"]
