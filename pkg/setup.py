"""Build script: compiles the optional C extension with the hot kernels.

The package works without the extension (a NumPy fallback is selected at
import time), so any failure here downgrades to a pure-Python build rather
than aborting the install.
"""

import sys

from setuptools import Extension, setup


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("breachcat: Cython not available, building without the compiled core",
              file=sys.stderr)
        return []
    return cythonize(
        [
            Extension(
                "breachcat._ckernels",
                ["src/breachcat/_ckernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )


try:
    setup(ext_modules=extensions())
except Exception as exc:  # compiler missing, etc.
    print(f"breachcat: extension build failed ({exc}); retrying pure Python",
          file=sys.stderr)
    setup(ext_modules=[])
