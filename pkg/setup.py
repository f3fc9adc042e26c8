"""Build shim for the optional compiled kernel extension.

The package works without the extension (a pure-Python twin is selected at
import time), so a failed compile only downgrades performance.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "teleopsim._kernels._ckernels",
                ["src/teleopsim/_kernels/_ckernels.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
