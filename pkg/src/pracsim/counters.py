"""Per-row activation counter semantics and snapshot export.

The counter storage itself lives in the channel kernel (one max-tree per
bank).  This module pins down the two update-engine models and provides
the JSON snapshot used for debugging dumps and oracle cross-checks.

Update engines:

* ``BANK_LEVEL_RMW`` - the counter read-modify-write rides the precharge
  and holds the whole bank for the full extended precharge time.
* ``CENTRALIZED_SUBARRAY`` - the array restore finishes at the plain
  precharge latency and the bank may activate non-conflicting subarrays,
  while the increment engine occupies the closed row's subarray and its
  open-bitline neighbors until the full extended precharge time.
"""

from __future__ import annotations

from typing import NamedTuple

from .timing import BASELINE_TIMING, PRAC_TIMING

BANK_LEVEL_RMW = "bank_level_rmw"
CENTRALIZED_SUBARRAY = "centralized_subarray"


class OccupancyWindow(NamedTuple):
    subarray_lo: int
    subarray_hi: int
    busy_until: int


class UpdateTiming(NamedTuple):
    bank_free_at: int  # earliest next activation on a non-conflicting path
    update_complete: int  # counter value committed / window closes


def precharge_update_timing(t: int, mode: str) -> UpdateTiming:
    """When a precharge issued at cycle ``t`` frees the bank and commits."""
    full = t + PRAC_TIMING.cycles("tRP")
    if mode == BANK_LEVEL_RMW:
        return UpdateTiming(full, full)
    if mode == CENTRALIZED_SUBARRAY:
        return UpdateTiming(t + BASELINE_TIMING.cycles("tRP"), full)
    raise ValueError(f"unknown update engine mode {mode!r}")


def occupancy_window(t: int, subarray: int, nsubs: int) -> OccupancyWindow:
    lo = subarray - 1 if subarray > 0 else 0
    hi = subarray + 1 if subarray + 1 < nsubs else nsubs - 1
    return OccupancyWindow(lo, hi, t + PRAC_TIMING.cycles("tRP"))


def counters_snapshot(kernel, nbanks: int) -> dict:
    """Nonzero counters keyed by bank then row, JSON-friendly."""
    snap: dict[str, dict[str, int]] = {}
    for b in range(nbanks):
        rows = kernel.counter_nonzero(b)
        if rows:
            snap[str(b)] = {str(r): int(v) for r, v in rows}
    return snap
