"""DDR5 command-clock timing presets.

Two presets are built in: the plain DDR5-3200AN timings and the
counter-update variant where the precharge phase absorbs the per-row
activation counter read-modify-write.  All nanosecond parameters are
quantized to the 0.625ns command clock by rounding up, which preserves
every minimum-gap guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

CLOCK_PS = 625  # DDR5-3200 command clock period

# CAS issue to data return, in cycles (CL + burst).  Identical for every
# preset so it cancels out of all cross-mechanism comparisons.
READ_DATA_CYCLES = 26


def ns_to_cycles(ns: float, clock_ps: int = CLOCK_PS) -> int:
    """Round a nanosecond interval up to whole command-clock cycles."""
    ps = int(round(ns * 1000))
    return -(-ps // clock_ps)


@dataclass(frozen=True)
class TimingSet:
    """One set of DRAM timing parameters, in nanoseconds."""

    name: str
    tRAS: float
    tRP: float
    tRC: float
    tRCD: float
    tRTP: float
    tWR: float
    tREFI: float = 3900.0
    tRFC: float = 410.0
    tREFW: float = 32_000_000.0
    tRFM: float = 350.0
    tPreRecovery: float = 180.0
    tRegRead: float = 10.0
    clock_ps: int = CLOCK_PS

    def __post_init__(self):
        for f in fields(self):
            if f.name in ("name", "clock_ps"):
                continue
            if getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")
        if self.tRC < self.tRAS + self.tRP - 1e-9:
            raise ValueError(
                f"{self.name}: tRC ({self.tRC}) < tRAS + tRP "
                f"({self.tRAS} + {self.tRP})"
            )

    def cycles(self, name: str) -> int:
        return ns_to_cycles(getattr(self, name), self.clock_ps)

    def with_overrides(self, **kwargs) -> "TimingSet":
        return replace(self, **kwargs)


# tRCD is not standardized for the counter-update preset; it is chosen so
# that tRCD + tRTP <= tRAS in both presets, i.e. the read-to-precharge
# path never outruns the tRC bound for back-to-back row conflicts.
_TRCD_NS = 11.25

BASELINE_TIMING = TimingSet(
    name="baseline",
    tRAS=32.0,
    tRP=15.0,
    tRC=47.0,
    tRCD=_TRCD_NS,
    tRTP=7.5,
    tWR=30.0,
)

PRAC_TIMING = TimingSet(
    name="prac",
    tRAS=16.0,
    tRP=36.0,
    tRC=52.0,
    tRCD=_TRCD_NS,
    tRTP=5.0,
    tWR=10.0,
)

PRESETS = {t.name: t for t in (BASELINE_TIMING, PRAC_TIMING)}


def acts_per_refresh_interval(timing: TimingSet) -> int:
    """Activations a single bank can absorb between two refresh commands.

    One REF occupies the bank for tRFC out of every tREFI, and back-to-back
    activations to the same bank are spaced by tRC.
    """
    return int((timing.tREFI - timing.tRFC) // timing.tRC)
