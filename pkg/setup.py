"""Build script for the optional compiled Monte-Carlo kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so failure to compile is not fatal for development installs:
run ``pip install -e . --no-build-isolation`` and check
``scalable_ib.mc.BACKEND`` to see which kernel is active.
"""

import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The kernel draws standard normals through NumPy's C API for bit
# generators, which lives in the static npyrandom library shipped inside
# the numpy wheel.
_npyrandom_dir = os.path.join(os.path.dirname(np.random.__file__), "lib")

extensions = [
    Extension(
        "scalable_ib._mc_ext",
        sources=["src/scalable_ib/_mc_ext.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[_npyrandom_dir],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
