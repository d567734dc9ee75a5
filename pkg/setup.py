"""Build script for the optional compiled kernel extension.

The package works without the extension (NumPy fallback is selected at
import); building it just makes the per-sample IIR pass and the SMO inner
loop fast. -ffp-contract=off keeps the compiled lane on the same IEEE
operation order as the fallback.
"""
from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "stampmon._kernels._core",
                ["src/stampmon/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
