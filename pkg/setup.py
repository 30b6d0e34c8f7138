import numpy as np
from setuptools import Extension, setup

# The compiled kernels are an optional speedup: if the extension fails to
# build, the package installs anyway and falls back to the NumPy
# implementations in maskpulse.kernels._ref.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "maskpulse.kernels._core",
                ["src/maskpulse/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
