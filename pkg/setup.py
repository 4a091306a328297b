"""Build script: compiles the optional fast simulation engine.

The package is fully functional without the extension (a pure-Python
engine is selected at import time); the build therefore tolerates a
missing compiler or Cython and falls back to a source-only install.
Set FADELINK_PURE=1 to skip the extension build entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """build_ext that degrades to a pure-Python install on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        import warnings

        warnings.warn(
            "fadelink: building the fast simulation engine failed (%s); "
            "falling back to the pure-Python engine" % (exc,)
        )


def extensions():
    if os.environ.get("FADELINK_PURE"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "fadelink._fastsim",
                ["src/fadelink/_fastsim.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
