"""Builds the optional compiled clearing kernel.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only costs speed.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "cournotla._kernel._active_set_cy",
                ["src/cournotla/_kernel/_active_set_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
