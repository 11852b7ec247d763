import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "firecrew.kernels._speedups",
                ["src/firecrew/kernels/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off: the compiled kernels must be bit-identical
                # to the numpy reference backend, so FMA contraction is disabled.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
