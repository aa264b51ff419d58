import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "uqe._simcore",
                ["src/uqe/_simcore.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # pure-Python fallback is selected at import time when the
    # compiled kernel is unavailable
    extensions = []

setup(ext_modules=extensions)
