"""Backend selection for the triad-sum kernels.

The compiled extension is used when it imports; set ``GALERKIN_TRAP_PURE=1``
to force the numpy fallback.  ``use_backend`` switches at runtime (tests and
the benchmark compare both).
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels

_active = "python" if os.environ.get("GALERKIN_TRAP_PURE") or _ckernels is None else "compiled"


def available_backends():
    return sorted(_BACKENDS)


def backend_name():
    return _active


def use_backend(name):
    """Select ``"compiled"`` or ``"python"``; returns the previous name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    prev, _active = _active, name
    return prev


def triad_2d(w, out, i1, i2, coef, n_out):
    return _BACKENDS[_active].triad_2d(w, out, i1, i2, coef, n_out)


def triad_3d(u, w, kout, out, i1, i2, n_out):
    return _BACKENDS[_active].triad_3d(u, w, kout, out, i1, i2, n_out)
