"""Build script: compiles the fast minibatch kernels when Cython is available.

The package works without the extension (a pure NumPy implementation of the
same kernels is selected at import time), so a failed extension build is not
fatal for `pip install`.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "alab._kernels._compiled",
                sources=["src/alab/_kernels/_compiled.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
