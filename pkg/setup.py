import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off keeps the kernel's float arithmetic bit-identical to
# the pure-Python fallback lane (no fused multiply-add).
setup(
    ext_modules=cythonize(
        [
            Extension(
                "riskdevs.montecarlo._kernel",
                ["src/riskdevs/montecarlo/_kernel.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
)
