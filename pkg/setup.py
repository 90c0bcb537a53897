import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # The compiled sweep kernel is optional; the package falls back to the
    # pure-NumPy backend when the extension is missing.
    ext_modules = []
else:
    ext = Extension(
        "cellbeam._pencil",
        ["src/cellbeam/_pencil.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
