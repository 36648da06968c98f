"""Build script: compiles the optional fast-math extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a failed compile only costs speed.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "tsedit._kernels_cy",
                ["src/tsedit/_kernels_cy.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # noqa: BLE001 - extension is optional
    print(f"tsedit: skipping compiled kernels ({exc}); numpy fallback will be used")

# name/packages repeated here so legacy setup.py code paths (old pip,
# `setup.py develop`) resolve the src/ layout identically to pyproject
setup(
    name="tsedit",
    version="0.1.0",
    package_dir={"": "src"},
    packages=["tsedit"],
    ext_modules=ext_modules,
)
