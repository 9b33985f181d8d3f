"""Build script for the optional compiled kernel.

The package is fully functional without the extension (a vectorized
fallback is selected at import time), so a failed compile only warns.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the kernel if we can; fall back to pure Python if not."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain, ...
            warnings.warn(f"compiled kernel skipped ({exc}); using the fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernel skipped ({exc}); using the fallback")


extensions = []
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "mathador._kernel._engine",
                sources=["src/mathador/_kernel/_engine.pyx"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    warnings.warn("Cython not available; building without the compiled kernel")

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
