"""Build script: compiles the optional search kernel extension.

The compiled kernel is a pure speed play; the package works without it
(gridplan.search falls back to the Python engine at import time), so a
failed compile downgrades to a warning instead of aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "gridplan._speedups",
                sources=["src/gridplan/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover
    print(f"warning: building without compiled kernel ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
