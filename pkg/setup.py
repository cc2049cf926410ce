import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "lindkoop._rk4",
        ["src/lindkoop/_rk4.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-fcx-limited-range"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
