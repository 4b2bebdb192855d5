import os

from setuptools import Extension, setup

# The compiled kernel is optional: the package falls back to the pure-Python
# twin at import time if the extension is absent or fails to build.
# -ffp-contract=off keeps the C code from fusing a*b+c into FMA so both
# backends perform identical IEEE-754 operations (byte-identical traces).
ext_modules = []
if os.environ.get("GRASPSIM_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "graspsim._kernels_cy",
                    ["src/graspsim/_kernels_cy.pyx"],
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
