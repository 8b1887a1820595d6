import numpy
from setuptools import setup, Extension
from Cython.Build import cythonize

# no FMA contraction and no fast-math: the compiled kernels must round
# exactly like the pure-Python fallback
extensions = [
    Extension(
        "boundary_reps._ckernels",
        ["src/boundary_reps/_ckernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": 3}))
