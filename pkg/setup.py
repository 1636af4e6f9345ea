"""Build script for the compiled stencil core.

The extension is optional: if it fails to build or import, the package
falls back to the pure-NumPy kernels in ``kspm._stencils_py``.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "kspm._stencils",
        ["src/kspm/_stencils.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
