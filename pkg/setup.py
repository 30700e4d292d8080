import os
import sys

from setuptools import Extension, setup

# Pure-Python installs skip the extension; the package falls back at import.
if os.environ.get("JOINTTYPE_NO_EXT"):
    ext_modules = []
else:
    from Cython.Build import cythonize

    openmp = [] if sys.platform == "darwin" else ["-fopenmp"]
    ext_modules = cythonize(
        [
            Extension(
                "jointtype._core",
                ["src/jointtype/_core.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off", *openmp],
                extra_link_args=openmp,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
