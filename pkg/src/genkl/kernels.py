"""Backend selection for the hot kernels.

The compiled Cython extension is preferred; the numpy implementation is
the fallback.  Set GENKL_PURE_PYTHON=1 to force the fallback (used by the
benchmark and the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("GENKL_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND

unit_inverses = _impl.unit_inverses
kloosterman_many = _impl.kloosterman_many
dihedral_bucket = _impl.dihedral_bucket


def get_backends():
    """Both backends (compiled one may be absent), for cross-checks."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
