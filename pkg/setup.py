import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("METRICDIFF_NO_EXT", "") not in ("1", "true"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "metricdiff._kernels._core",
                    ["src/metricdiff/_kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython available: install pure-Python only, the kernel shim
        # falls back to the numpy implementation at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
