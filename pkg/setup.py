import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps float results identical to the numpy fallbacks.
compile_args = ["-O3", "-ffp-contract=off"]

extensions = [
    Extension(
        "bias_probe.forest._tree_kernel",
        ["src/bias_probe/forest/_tree_kernel.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    ),
    Extension(
        "bias_probe.explain._slic_kernel",
        ["src/bias_probe/explain/_slic_kernel.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    ),
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
