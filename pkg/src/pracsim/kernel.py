"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; setting
``PRACSIM_PURE_PYTHON=1`` (or asking for ``backend="python"`` explicitly)
forces the pure-Python twin.  Both expose the same ``ChannelKernel``.
"""

from __future__ import annotations

import os

from . import _kernel_py
from .geometry import DramGeometry
from .timing import PRAC_TIMING, TimingSet

NEED_CAS = _kernel_py.NEED_CAS
NEED_ACT = _kernel_py.NEED_ACT
NEED_PRE = _kernel_py.NEED_PRE

try:
    from . import _kernel as _compiled
except ImportError:  # pragma: no cover - depends on build environment
    _compiled = None


def available_backends() -> list[str]:
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def default_backend() -> str:
    if os.environ.get("PRACSIM_PURE_PYTHON"):
        return "python"
    return "cython" if _compiled is not None else "python"


def kernel_class(backend: str = "auto"):
    if backend == "auto":
        backend = default_backend()
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled.ChannelKernel
    if backend == "python":
        return _kernel_py.ChannelKernel
    raise ValueError(f"unknown kernel backend {backend!r}")


def make_kernel(
    geometry: DramGeometry,
    timing: TimingSet,
    mechanism_practical: bool,
    counters_on: bool,
    counter_width: int = 16,
    base_timing: TimingSet | None = None,
    backend: str = "auto",
):
    """Build a channel kernel for one simulation instance.

    Under subarray-level counter updates the PRE->ACT and ACT->ACT gaps on
    the non-conflicting path revert to the plain-preset values while the
    occupancy window (the in-flight counter update) carries the full
    precharge latency for conflicting subarrays.
    """
    cls = kernel_class(backend)
    if mechanism_practical:
        base = base_timing if base_timing is not None else timing
        act_rp = base.cycles("tRP")
        act_rc = base.cycles("tRC")
    else:
        act_rp = timing.cycles("tRP")
        act_rc = timing.cycles("tRC")
    return cls(
        geometry.banks_per_channel,
        geometry.rows_per_bank,
        geometry.rows_per_subarray,
        timing.cycles("tRAS"),
        timing.cycles("tRCD"),
        timing.cycles("tRTP"),
        timing.cycles("tWR"),
        act_rp,
        act_rc,
        mechanism_practical,
        PRAC_TIMING.cycles("tRP"),
        counters_on,
        (1 << counter_width) - 1,
    )
