"""Selection between the compiled and pure-Python protocol loops.

The compiled extension is preferred when it imported cleanly; set
``ADAPTMAG_BACKEND=python`` or ``=cython`` to force one. Both backends are
bit-identical (enforced by the test suite), so the choice only affects
speed.
"""

from __future__ import annotations

import os
import time
from typing import Any

from . import _loop_py

try:
    from . import _loop_cy

    HAVE_COMPILED = True
except ImportError:  # extension not built; pure-Python fallback
    _loop_cy = None
    HAVE_COMPILED = False

_ENV_VAR = "ADAPTMAG_BACKEND"
BACKEND_NAMES = ("cython", "python")


def resolve_backend(name: str | None = None) -> tuple[str, Any]:
    """Return (name, module) for the requested or default backend."""
    if name is None:
        name = os.environ.get(_ENV_VAR, "auto")
    name = name.lower()
    if name == "auto":
        name = "cython" if HAVE_COMPILED else "python"
    if name == "cython":
        if not HAVE_COMPILED:
            raise RuntimeError(
                "compiled backend requested but adaptmag._loop_cy is not built; "
                "reinstall the package or set ADAPTMAG_BACKEND=python"
            )
        return "cython", _loop_cy
    if name == "python":
        return "python", _loop_py
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKEND_NAMES} or 'auto'")


def active_backend_name() -> str:
    return resolve_backend()[0]


def benchmark_backends(runner, repeats: int = 3) -> dict[str, float]:
    """Best-of-N wall time of ``runner(backend_name)`` per available backend."""
    results: dict[str, float] = {}
    names = ["python"] + (["cython"] if HAVE_COMPILED else [])
    for name in names:
        best = float("inf")
        for _ in range(repeats):
            start = time.perf_counter()
            runner(name)
            best = min(best, time.perf_counter() - start)
        results[name] = best
    return results
