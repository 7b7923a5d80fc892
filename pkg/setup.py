import os

from setuptools import Extension, setup

extra = ["-O2", "-ffp-contract=off"]

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("ILPSHAPE_NO_EXT") != "1":
    ext_modules = cythonize(
        [Extension("ilpshape._kernels", ["src/ilpshape/_kernels.pyx"], extra_compile_args=extra)],
        language_level=3,
    )

setup(ext_modules=ext_modules)
