"""Build script for the optional compiled trajectory kernel.

The package is pure Python plus one Cython extension that accelerates the
stochastic hierarchy integrator.  If the extension cannot be built (no
compiler, no Cython) the install still succeeds and the package falls back
to the NumPy kernel at import time.
"""

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Let a failed extension build degrade to the pure-Python fallback."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"warning: compiled kernel skipped ({exc}); "
                  "falling back to the NumPy integrator")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "falling back to the NumPy integrator")


extensions = [
    Extension(
        "maglink._hier_cy",
        ["src/maglink/_hier_cy.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

try:
    from Cython.Build import cythonize
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
except ImportError:
    print("warning: Cython not available; installing with the NumPy integrator only")
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
