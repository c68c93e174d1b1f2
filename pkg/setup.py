"""Build script for the optional compiled trial kernel.

The package works without the extension (a numpy fallback is selected at
import time); the extension only speeds up the per-trial session loop.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "steersim._kernels._ctrials",
                ["src/steersim/_kernels/_ctrials.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython at build time: install the pure-python package only.
    pass

setup(ext_modules=ext_modules)
