"""Build script: compiles the optional graph-kernel extension.

The package is fully functional without it (a pure-Python fallback is
selected at import), so a failed extension build only warns.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/wasisurf/graphkern/_speedups.pyx"],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    warnings.warn(f"building without compiled graph kernels: {exc}")

setup(ext_modules=ext_modules)
