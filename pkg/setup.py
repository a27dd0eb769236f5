"""Build hook for the optional compiled kernel core.

The package is fully functional without the extension (the numpy kernels
are selected at import time when `walklab.kernels._core` is missing), so a
failed cythonization degrades to a pure-Python install instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/walklab/kernels/_core.pyx",
        language_level=3,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"walklab: skipping compiled kernels ({exc}); numpy fallback will be used")

setup(ext_modules=ext_modules)
