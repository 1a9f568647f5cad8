"""Backend selection for the hot kernels.

Two interchangeable implementations exist: the compiled Cython core
(fdbench._core, built when a C toolchain is present) and the pure-NumPy
fallback (fdbench.backend.pure). Selection order:

* FDBENCH_BACKEND=compiled forces the compiled core (error if missing);
* FDBENCH_BACKEND=pure forces the fallback;
* unset or "auto": compiled if importable, else pure.

Both expose: pair_sum, gram, kendall_s, perm_tail_count, and the kernel
kind codes KIND_RBF / KIND_POLY / KIND_RQ.
"""

from __future__ import annotations

import contextlib
import os
from types import ModuleType

from . import pure

KIND_RBF = pure.KIND_RBF
KIND_POLY = pure.KIND_POLY
KIND_RQ = pure.KIND_RQ

_active: ModuleType | None = None
_active_name: str | None = None


def _load(choice: str) -> tuple[ModuleType, str]:
    if choice == "pure":
        return pure, "pure"
    try:
        from fdbench import _core
    except ImportError:
        if choice == "compiled":
            raise RuntimeError(
                "FDBENCH_BACKEND=compiled but the compiled core is not "
                "built; reinstall with a C toolchain available")
        return pure, "pure"
    return _core, "compiled"


def active() -> ModuleType:
    """The backend module in effect (resolved once, lazily)."""
    global _active, _active_name
    if _active is None:
        choice = os.environ.get("FDBENCH_BACKEND", "auto").lower()
        if choice not in ("auto", "compiled", "pure"):
            raise ValueError(
                f"FDBENCH_BACKEND must be auto, compiled, or pure; "
                f"got {choice!r}")
        _active, _active_name = _load(choice)
    return _active


def active_name() -> str:
    active()
    assert _active_name is not None
    return _active_name


@contextlib.contextmanager
def use(name: str):
    """Temporarily force a backend (tests and benchmarks)."""
    global _active, _active_name
    prev = (_active, _active_name)
    _active, _active_name = _load(name)
    try:
        yield _active
    finally:
        _active, _active_name = prev
