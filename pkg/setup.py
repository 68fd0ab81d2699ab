"""Build script for the optional compiled similarity kernel.

The package is pure Python except for ``sqlscore._gestalt_fast``, a Cython
implementation of the gestalt sequence matcher used on the hot path of batch
reward scoring. If Cython or a C compiler is unavailable the extension is
skipped and the package falls back to the stdlib matcher at import time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/sqlscore/_gestalt_fast.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
