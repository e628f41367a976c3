import sys

from Cython.Build import cythonize
from setuptools import Extension, setup

if sys.platform == "win32":
    omp_compile = ["/openmp", "/O2"]
    omp_link = []
else:
    omp_compile = ["-O3", "-fopenmp"]
    omp_link = ["-fopenmp"]

extensions = [
    Extension(
        "posc._kernels",
        ["src/posc/_kernels.pyx"],
        extra_compile_args=omp_compile,
        extra_link_args=omp_link,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
