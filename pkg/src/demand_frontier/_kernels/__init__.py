"""Numerical kernel backend selection.

The compiled extension is preferred when it imports cleanly; otherwise the
NumPy/SciPy fallback is used.  Set DEMAND_FRONTIER_KERNELS=python|compiled
to force a backend (the benchmark and the equivalence tests do).
"""

from __future__ import annotations

import importlib
import os

from . import _pykernels

_forced = os.environ.get("DEMAND_FRONTIER_KERNELS", "").strip().lower()

_compiled = None
if _forced != "python":
    try:
        _compiled = importlib.import_module("demand_frontier._kernels._ckernels")
    except ImportError:
        if _forced == "compiled":
            raise ImportError(
                "DEMAND_FRONTIER_KERNELS=compiled but the compiled kernels "
                "are not built; run `pip install -e .` first"
            )

_impl = _compiled if _compiled is not None else _pykernels

BACKEND: str = _impl.BACKEND
loess_fit = _impl.loess_fit
garch_filter = _impl.garch_filter
arma_residuals = _impl.arma_residuals


def available_backends() -> dict[str, object]:
    """Importable backend modules keyed by name."""
    out: dict[str, object] = {"python": _pykernels}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
