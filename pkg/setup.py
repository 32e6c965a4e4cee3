import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "blockhyperg._kernels",
                ["src/blockhyperg/_kernels.pyx"],
                include_dirs=[np.get_include()],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    # the package still works without the compiled kernels
    ext_modules = []

setup(ext_modules=ext_modules)
