"""Build script for the optional compiled LSTM kernel.

The package is fully functional without the extension: emotensity.kernels
falls back to a pure-numpy implementation when the compiled module is
missing (see benchmarks/bench_kernels.py for the speed difference).
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "emotensity.kernels._native",
                ["src/emotensity/kernels/_native.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
