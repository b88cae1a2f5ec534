"""Kernel backend selection.

The compiled Cython backend is preferred; the pure-numpy backend is the
fallback. Override with ``SSMCONTROL_BACKEND=python`` (or ``compiled``) to
force a choice, e.g. for benchmarking one against the other.
"""

import os

from . import pyk

_requested = os.environ.get("SSMCONTROL_BACKEND", "").lower()

if _requested == "python":
    _impl = pyk
    BACKEND = "python"
else:
    try:
        from . import cyk as _impl
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "SSMCONTROL_BACKEND=compiled but the Cython kernels are not "
                "built; reinstall the package with a working C toolchain")
        _impl = pyk
        BACKEND = "python"

poly_eval = _impl.poly_eval
poly_eval_batch = _impl.poly_eval_batch
tf_eval = _impl.tf_eval
tf_eval_batch = _impl.tf_eval_batch
rom_rk4 = _impl.rom_rk4
fom_rk4 = _impl.fom_rk4
