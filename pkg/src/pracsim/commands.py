"""Request and command currency shared by the controller, engine and oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

# DRAM-side command kinds, as they appear in command logs.
ACT = "ACT"
PRE = "PRE"
RD = "RD"
WR = "WR"
REF = "REF"
RFM_AB = "RFM_AB"
RFM_MASK = "RFM_MASK"

# Markers that accompany the command stream in event logs.
EV_ALERT = "ALERT"
EV_MITIGATE = "MIT"
EV_SNAPSHOT = "SNAP"


class CommandEvent(NamedTuple):
    """One logged channel event.

    ``bank`` is the channel-flat bank index; for REF it is the rank index
    and for RFM commands the recovery ordinal.  ``extra`` carries the
    command-specific payload (row, mask tuple, victim tuple, ...).
    """

    t: int
    kind: str
    bank: int
    extra: tuple


@dataclass
class MemRequest:
    """One cacheline access as seen by the memory controller."""

    id: int
    core: int
    is_write: bool
    address: int
    bank: int  # channel-flat
    row: int
    subarray: int
    arrival: int
    completion: int | None = None
