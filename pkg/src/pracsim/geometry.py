"""Channel topology: ranks, bank groups, banks, subarrays, rows."""

from __future__ import annotations

from dataclasses import dataclass


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class DramGeometry:
    channels: int = 1
    ranks_per_channel: int = 2
    bankgroups_per_rank: int = 8
    banks_per_group: int = 4
    rows_per_bank: int = 65536
    columns_per_row: int = 128
    subarrays_per_bank: int = 256
    cacheline_bytes: int = 64

    def __post_init__(self):
        for name in (
            "channels",
            "ranks_per_channel",
            "bankgroups_per_rank",
            "banks_per_group",
            "rows_per_bank",
            "columns_per_row",
            "subarrays_per_bank",
            "cacheline_bytes",
        ):
            value = getattr(self, name)
            if not _is_pow2(value):
                raise ValueError(f"{name} must be a power of two >= 1, got {value}")
        if self.rows_per_bank % self.subarrays_per_bank:
            raise ValueError("rows_per_bank must be a multiple of subarrays_per_bank")

    @property
    def banks_per_rank(self) -> int:
        return self.bankgroups_per_rank * self.banks_per_group

    @property
    def banks_per_channel(self) -> int:
        return self.ranks_per_channel * self.banks_per_rank

    @property
    def rows_per_subarray(self) -> int:
        return self.rows_per_bank // self.subarrays_per_bank

    @property
    def capacity_bytes(self) -> int:
        return (
            self.channels
            * self.ranks_per_channel
            * self.banks_per_rank
            * self.rows_per_bank
            * self.columns_per_row
            * self.cacheline_bytes
        )

    def flat_bank(self, rank: int, bankgroup: int, bank: int) -> int:
        """Flatten (rank, bankgroup, bank) into a channel-wide bank index."""
        return (rank * self.bankgroups_per_rank + bankgroup) * self.banks_per_group + bank

    def unflatten_bank(self, flat: int) -> tuple[int, int, int]:
        bank = flat % self.banks_per_group
        group = (flat // self.banks_per_group) % self.bankgroups_per_rank
        rank = flat // self.banks_per_rank
        return rank, group, bank


DEFAULT_GEOMETRY = DramGeometry()


def row_to_subarray(row: int, geometry: DramGeometry) -> int:
    """Map a row index to its subarray (contiguous blocks of rows)."""
    if not 0 <= row < geometry.rows_per_bank:
        raise ValueError(f"row {row} out of range (< {geometry.rows_per_bank})")
    return row // geometry.rows_per_subarray


def subarrays_conflict(a: int, b: int) -> bool:
    """Whether two subarrays contend for sense amplifiers.

    Open-bitline arrays share amplifiers between adjacent subarrays, so a
    subarray conflicts with itself and its immediate neighbors.
    """
    return abs(a - b) <= 1


@dataclass(frozen=True)
class Location:
    """Fully decoded coordinates of one cacheline-sized access."""

    channel: int
    rank: int
    bankgroup: int
    bank: int
    row: int
    column: int
    subarray: int

    def flat_bank(self, geometry: DramGeometry) -> int:
        return geometry.flat_bank(self.rank, self.bankgroup, self.bank)
