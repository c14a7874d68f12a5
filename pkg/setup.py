from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "spinprobe._rk4",
        ["src/spinprobe/_rk4.pyx"],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
