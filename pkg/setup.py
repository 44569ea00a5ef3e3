"""Build script for the optional compiled SDCA kernel.

The package is fully functional without the extension: ratecon._kernels
falls back to a pure-Python (numpy) implementation when the compiled
module is missing.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "ratecon._kernels._sdca_cy",
                ["src/ratecon/_kernels/_sdca_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
