"""Build the optional compiled kernels; the package runs without them."""
import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("RWRE_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "rwre._kernels",
                ["src/rwre/_kernels.pyx"],
                language="c++",
                # no fast-math / FMA contraction: results must match the pure-Python kernels bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off", "-std=c++17"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
