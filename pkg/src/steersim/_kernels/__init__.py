"""Trial-kernel backend selection.

The compiled Cython kernel is preferred when importable; the numpy fallback
is outcome-identical. Set STEERSIM_KERNEL=python or =compiled to force a
backend (the latter raises if the extension is missing).
"""

from __future__ import annotations

import os

_requested = os.environ.get("STEERSIM_KERNEL", "auto").lower()
if _requested not in ("auto", "compiled", "python"):
    raise ValueError(
        f"STEERSIM_KERNEL={_requested!r} not one of 'auto', 'compiled', 'python'"
    )

_impl = None
if _requested in ("auto", "compiled"):
    try:
        from . import _ctrials as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = None
if _impl is None:
    from . import python as _impl  # type: ignore[no-redef]

BACKEND = _impl.BACKEND_NAME
simulate_honest = _impl.simulate_honest
simulate_lhs = _impl.simulate_lhs


def available_backends() -> list[str]:
    names = []
    try:
        from . import _ctrials  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    names.append("python")
    return names
