"""Kernel backend selection.

The compiled Cython extension is preferred when importable; the numpy
fallback is used otherwise.  Set ``MMLLAB_PURE_PYTHON=1`` to force the
fallback (useful for the backend benchmark and for debugging).
"""

from __future__ import annotations

import os

from . import pykernels

if os.environ.get("MMLLAB_PURE_PYTHON"):
    _impl = pykernels
    BACKEND = "python"
else:
    try:
        from . import _compiled as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = pykernels
        BACKEND = "python"

simulate_episodes = _impl.simulate_episodes
rollout_returns = _impl.rollout_returns
gram_accumulate = _impl.gram_accumulate


def available_backends() -> list[str]:
    names = ["python"]
    try:
        from . import _compiled  # noqa: F401

        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Return the kernel module for ``name`` ('compiled' or 'python')."""
    if name == "python":
        return pykernels
    if name == "compiled":
        from . import _compiled

        return _compiled
    raise ValueError(f"unknown backend {name!r}")
