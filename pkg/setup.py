"""Build script for the optional compiled convolution kernels.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes training faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "evdetect.autodiff.kernels._convcy",
                ["src/evdetect/autodiff/kernels/_convcy.pyx"],
                extra_compile_args=["-O3", "-funroll-loops", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=extensions)
