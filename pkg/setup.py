"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-Python fallback is selected at
import time), so a failed compile downgrades to a warning instead of aborting
the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that tolerates a missing/broken C toolchain."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            warnings.warn(f"skipping compiled kernels ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            warnings.warn(f"skipping {ext.name} ({exc}); using pure-Python fallback")


def make_ext_modules():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    extensions = [
        Extension(
            "styleirl._kernels._accel",
            ["src/styleirl/_kernels/_accel.pyx"],
            # -ffp-contract=off keeps float results bit-identical to the
            # pure-Python kernels (no fused multiply-add contraction).
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
    ]
    return cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
        },
    )


setup(ext_modules=make_ext_modules(), cmdclass={"build_ext": OptionalBuildExt})
