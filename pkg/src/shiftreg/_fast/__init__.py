"""Backend selection for the statistic kernels.

Prefers the compiled extension; falls back to the numpy implementation when
the extension is absent (source install without a compiler) or when
SHIFTREG_PURE_PYTHON=1 forces the fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import os

_forced = os.environ.get("SHIFTREG_PURE_PYTHON", "").strip() not in ("", "0")

if _forced:
    from . import _stats_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _stats as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _stats_py as _impl

        BACKEND = "python"

dcov_terms = _impl.dcov_terms
kendall_tau = _impl.kendall_tau

__all__ = ["BACKEND", "dcov_terms", "kendall_tau"]
