"""Build script for the optional compiled solver kernels.

The extension is best-effort: if Cython or a C compiler is unavailable the
package installs anyway and falls back to the pure-NumPy kernels at import
time (see onebit.backend).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "onebit._kernels",
                ["src/onebit/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
