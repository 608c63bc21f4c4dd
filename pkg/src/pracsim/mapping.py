"""Physical address mapping (MOP scheme).

A small group of consecutive cache blocks lands in one row-bank slice
before the mapping rotates to the next bank, which spreads streams across
banks while keeping short bursts inside one row.  Bit layout, low to high:

    block offset | mop column bits | bank | bankgroup | rank | channel |
    remaining column bits | row
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import DramGeometry, Location, row_to_subarray


def _bits(n: int) -> int:
    return (n - 1).bit_length()


@dataclass(frozen=True)
class AddressMapping:
    geometry: DramGeometry
    mop_width: int = 4

    def __post_init__(self):
        g = self.geometry
        if self.mop_width < 1 or g.columns_per_row % self.mop_width:
            raise ValueError("mop_width must divide columns_per_row")
        object.__setattr__(self, "_off_bits", _bits(g.cacheline_bytes))
        object.__setattr__(self, "_mop_bits", _bits(self.mop_width))
        object.__setattr__(self, "_bank_bits", _bits(g.banks_per_group))
        object.__setattr__(self, "_bg_bits", _bits(g.bankgroups_per_rank))
        object.__setattr__(self, "_rank_bits", _bits(g.ranks_per_channel))
        object.__setattr__(self, "_ch_bits", _bits(g.channels))
        object.__setattr__(
            self, "_colhi_bits", _bits(g.columns_per_row) - self._mop_bits
        )
        object.__setattr__(self, "_row_bits", _bits(g.rows_per_bank))

    def decode(self, address: int) -> Location:
        if not 0 <= address < self.geometry.capacity_bytes:
            raise ValueError(f"address {address:#x} out of range")
        a = address >> self._off_bits
        mop_col = a & (self.mop_width - 1)
        a >>= self._mop_bits
        bank = a & (self.geometry.banks_per_group - 1)
        a >>= self._bank_bits
        group = a & (self.geometry.bankgroups_per_rank - 1)
        a >>= self._bg_bits
        rank = a & (self.geometry.ranks_per_channel - 1)
        a >>= self._rank_bits
        channel = a & (self.geometry.channels - 1)
        a >>= self._ch_bits
        col_hi = a & ((1 << self._colhi_bits) - 1)
        a >>= self._colhi_bits
        row = a
        column = col_hi * self.mop_width + mop_col
        return Location(
            channel=channel,
            rank=rank,
            bankgroup=group,
            bank=bank,
            row=row,
            column=column,
            subarray=row_to_subarray(row, self.geometry),
        )

    def encode(self, loc: Location) -> int:
        g = self.geometry
        if not (
            0 <= loc.channel < g.channels
            and 0 <= loc.rank < g.ranks_per_channel
            and 0 <= loc.bankgroup < g.bankgroups_per_rank
            and 0 <= loc.bank < g.banks_per_group
            and 0 <= loc.row < g.rows_per_bank
            and 0 <= loc.column < g.columns_per_row
        ):
            raise ValueError(f"location out of range: {loc}")
        col_hi, mop_col = divmod(loc.column, self.mop_width)
        a = loc.row
        a = (a << self._colhi_bits) | col_hi
        a = (a << self._ch_bits) | loc.channel
        a = (a << self._rank_bits) | loc.rank
        a = (a << self._bg_bits) | loc.bankgroup
        a = (a << self._bank_bits) | loc.bank
        a = (a << self._mop_bits) | mop_col
        return a << self._off_bits

    def encode_coords(
        self,
        rank: int,
        bankgroup: int,
        bank: int,
        row: int,
        column: int = 0,
        channel: int = 0,
    ) -> int:
        return self.encode(
            Location(
                channel=channel,
                rank=rank,
                bankgroup=bankgroup,
                bank=bank,
                row=row,
                column=column,
                subarray=row_to_subarray(row, self.geometry),
            )
        )
