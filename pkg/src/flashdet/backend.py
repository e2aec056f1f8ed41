"""Kernel backend selection.

The chain sweep and the BP decoder dominate runtime, so they exist twice:
a numba-jitted version and a pure-NumPy one with the same contract.  Set
FLASHDET_BACKEND=numpy to force the fallback (or =numba to require the JIT);
unset, the jitted kernels are used when numba imports cleanly.

benchmarks/bench_backends.py times the two side by side.
"""

from __future__ import annotations

import os

_ENV = "FLASHDET_BACKEND"


def _select():
    choice = os.environ.get(_ENV, "").strip().lower()
    if choice not in ("", "numba", "numpy"):
        raise ValueError(f"{_ENV} must be 'numba' or 'numpy', got {choice!r}")
    if choice != "numpy":
        try:
            from . import _kernels_numba as impl

            return impl, "numba"
        except ImportError:
            if choice == "numba":
                raise
    from . import _kernels_numpy as impl

    return impl, "numpy"


_impl, _name = _select()

forward_backward = _impl.forward_backward
bp_decode = _impl.bp_decode


def active_backend() -> str:
    """Name of the kernel backend in use ('numba' or 'numpy')."""
    return _name
