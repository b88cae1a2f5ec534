"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import time), so a failed compile only costs speed, not functionality.
"""

import sys

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("ssmcontrol.kernels.cyk",
                   ["src/ssmcontrol/kernels/cyk.pyx"])],
        language_level="3",
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - toolchain-dependent
    print(f"warning: Cython kernels not built ({exc}); "
          "falling back to the pure-python backend", file=sys.stderr)

setup(ext_modules=ext_modules)
