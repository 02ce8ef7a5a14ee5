"""Pick the compiled integrator when it is importable.

Set DCLAB_PURE_PYTHON=1 to force the scipy fallback.
"""

import os

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from . import _fallback

_NS = _dop.N_STAGES
_TABLE = dict(
    A=np.ascontiguousarray(_dop.A[:_NS, :_NS], dtype=float),
    B=np.ascontiguousarray(_dop.B, dtype=float),
    C=np.ascontiguousarray(_dop.C[:_NS], dtype=float),
    E3=np.ascontiguousarray(_dop.E3, dtype=float),
    E5=np.ascontiguousarray(_dop.E5, dtype=float),
)

_compiled = None
if os.environ.get("DCLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _stepper as _compiled
    except ImportError:  # no build available
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def integrate(*args, backend=None, **kw):
    """Dispatch to the selected backend; ``backend`` overrides the default."""
    name = backend or BACKEND
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled stepper not available")
        return _compiled.integrate(*args, **_TABLE, **kw)
    return _fallback.integrate(*args, **kw)
