"""Build the optional compiled Haar kernels.

The extension is best-effort: if no C compiler (or Cython) is available the
install proceeds and the package falls back to the pure-numpy kernels at
import time.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """A build_ext that degrades to the pure-Python fallback on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing toolchain
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # compile/link failure
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: building the compiled kernels failed ({exc}); "
            "codedfti will use the pure-numpy fallback.",
            file=sys.stderr,
        )


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"WARNING: {exc}; skipping compiled kernels.", file=sys.stderr)
        return [], []
    exts = cythonize(
        ["src/codedfti/kernels/_haar_cy.pyx"],
        compiler_directives={"language_level": "3"},
    )
    return exts, [numpy.get_include()]


ext_modules, include_dirs = extensions()

setup(
    ext_modules=ext_modules,
    include_dirs=include_dirs,
    cmdclass={"build_ext": optional_build_ext},
)
