"""Builds the optional compiled interpreter kernel.

If Cython or a C compiler is unavailable the package still installs and
runs on the pure-Python kernel.
"""

import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled kernel not built ({exc}); using pure Python",
                  file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: building {ext.name} failed ({exc}); using pure Python",
                  file=sys.stderr)


def extensions():
    if os.environ.get("SUITEVOLVE_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension

    kernel = Extension(
        "suitevolve.minilang._ckernel",
        ["src/suitevolve/minilang/_ckernel.pyx"],
        extra_compile_args=["-O2"],
    )
    return cythonize([kernel], compiler_directives={"language_level": 3}, quiet=True)


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
