import platform

import numpy
from setuptools import Extension, setup

compile_args = ["-O3"]
if platform.machine() in ("x86_64", "AMD64"):
    # hardware popcnt instead of the libgcc fallback
    compile_args.append("-mpopcnt")

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "bobsearch._kernels",
                ["src/bobsearch/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=compile_args,
            )
        ],
        language_level=3,
    )
except ImportError:
    # no Cython: install with the pure-Python kernel fallback
    extensions = []

setup(ext_modules=extensions)
