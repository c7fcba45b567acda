"""Build script for the optional compiled kernels.

The extension is marked optional: if Cython or a C compiler is missing the
package still installs and falls back to the pure-Python kernels.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "hyperdescent._ckernels",
                ["src/hyperdescent/_ckernels.pyx"],
                extra_compile_args=["-O2"],
                libraries=["m"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
