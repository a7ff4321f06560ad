"""Kernel backend selection: compiled extension if available, NumPy otherwise.

Set FBBELL_KERNELS=python or FBBELL_KERNELS=cython to force a choice;
'cython' raises if the extension was not built.
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCED = os.environ.get("FBBELL_KERNELS", "auto").lower()

if _FORCED not in ("auto", "python", "cython"):
    raise RuntimeError(
        f"FBBELL_KERNELS must be 'auto', 'python' or 'cython', got {_FORCED!r}"
    )

_cy = None
if _FORCED in ("auto", "cython"):
    try:
        from . import _kernels_cy as _cy  # type: ignore[no-redef]
    except ImportError:
        if _FORCED == "cython":
            raise RuntimeError(
                "FBBELL_KERNELS=cython but the compiled kernel extension is "
                "not importable; reinstall with a C compiler available"
            ) from None

_impl = _cy if _cy is not None else _kernels_py

bures_rho = _impl.bures_rho
loglik_tables = _impl.loglik_tables


def backend_name() -> str:
    """'cython' when the compiled kernels are active, else 'python'."""
    return _impl.BACKEND_NAME


def available_backends() -> dict:
    """Map of backend name -> module, for benchmarking both paths."""
    table = {"python": _kernels_py}
    if _cy is not None:
        table["cython"] = _cy
    return table
