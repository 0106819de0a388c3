from setuptools import Extension, setup
from Cython.Build import cythonize

# The pure-Python twin of this kernel evaluates one floating-point operation
# per rounding step, so the compiled loop must not fuse any: no multiply-add
# contraction, and no merging of adjacent cos/sin calls into glibc sincos
# (whose last ulp can differ from the separate calls).
extensions = [
    Extension(
        "adaptmag._loop_cy",
        ["src/adaptmag/_loop_cy.pyx"],
        extra_compile_args=[
            "-ffp-contract=off",
            "-fno-builtin-sin",
            "-fno-builtin-cos",
            "-fno-builtin-sincos",
        ],
    ),
]

setup(ext_modules=cythonize(extensions, language_level=3))
