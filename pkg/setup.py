"""Build script: compiles the optional curve-geometry extension.

The package works without the extension (a pure-Python twin is selected
at import time), so any build failure here is deliberately non-fatal.
"""

import os

from setuptools import Extension, setup

ext_modules = []
try:
    if not os.path.exists("src/combiseg/_curvekernel.pyx"):
        raise ImportError
    from Cython.Build import cythonize
    import numpy as np

    ext = Extension(
        "combiseg._curvekernel",
        ["src/combiseg/_curvekernel.pyx"],
        include_dirs=[np.get_include()],
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
