"""Build script for the optional compiled LSTM kernels.

The package is fully functional without the extension (a pure numpy
fallback is selected at import time), so the extension is marked
optional and a failed compile does not fail the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "segrefine.tagger._ckernels",
        ["src/segrefine/tagger/_ckernels.pyx"],
        extra_compile_args=["-O3"],
    )
    ext.optional = True
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
