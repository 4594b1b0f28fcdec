"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import time), so any failure here degrades to a pure-Python install
instead of aborting.
"""

import warnings

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("hmmforget._kernels", ["src/hmmforget/_kernels.pyx"])],
        language_level="3",
    )
except ImportError:
    warnings.warn("Cython not available; installing with pure-python kernels only")

setup(ext_modules=ext_modules)
