"""Build script: compiles the optional accelerator extension when Cython and
a C compiler are available. The package works without it (a numpy fallback is
selected at import time), so any build failure here degrades gracefully."""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "drclip._accel",
                ["src/drclip/_accel.pyx"],
                # -ffp-contract=off forbids fused multiply-add so the compiled
                # kernel is bit-identical to the numpy fallback.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
