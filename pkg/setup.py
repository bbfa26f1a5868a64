"""Build script.

The package itself is pure Python.  A small Cython extension
(``svmlab._fastloops``) accelerates the two hot solver loops (dual coordinate
ascent sweeps and the projected subgradient iteration).  If Cython or a C
compiler is missing the build silently falls back to a pure install; the
package selects a NumPy/SciPy implementation at import time.

Build the extension in place for development with

    python setup.py build_ext --inplace
"""

from setuptools import setup

ext_modules = []
include_dirs = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "svmlab._fastloops",
                sources=["src/svmlab/_fastloops.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - depends on toolchain
    print(f"svmlab: building without compiled extension ({exc!r})")

setup(ext_modules=ext_modules, include_dirs=include_dirs)
