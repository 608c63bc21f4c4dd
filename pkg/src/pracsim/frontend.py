"""Trace format, core model, and workload/attack generators.

Trace lines are ``<bubble> <R|W> <hex address>``: the number of
non-memory instructions preceding the access, the access kind, and the
physical byte address.  ``#`` starts a comment.

The core model retires instructions at a fixed bandwidth and tracks
outstanding reads in a bounded window; see ``Core`` for the exact
accounting rules, which the naive reference model reimplements per-cycle.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .geometry import DramGeometry, row_to_subarray
from .mapping import AddressMapping
from .recovery import ConfigError
from .timing import TimingSet, acts_per_refresh_interval


class TraceEntry(NamedTuple):
    bubble: int
    is_write: bool
    address: int


class TraceParseError(ValueError):
    pass


def parse_trace_line(line: str, lineno: int = 0) -> TraceEntry | None:
    text = line.split("#", 1)[0].strip()
    if not text:
        return None
    parts = text.split()
    if len(parts) != 3 or parts[1] not in ("R", "W"):
        raise TraceParseError(f"line {lineno}: expected '<bubble> <R|W> <hex addr>', got {line!r}")
    try:
        bubble = int(parts[0])
        address = int(parts[2], 16)
    except ValueError as exc:
        raise TraceParseError(f"line {lineno}: {exc}") from None
    if bubble < 0 or address < 0:
        raise TraceParseError(f"line {lineno}: negative field in {line!r}")
    return TraceEntry(bubble, parts[1] == "W", address)


def parse_trace(lines) -> list[TraceEntry]:
    entries = []
    for lineno, line in enumerate(lines, start=1):
        entry = parse_trace_line(line, lineno)
        if entry is not None:
            entries.append(entry)
    return entries


def load_trace(path) -> list[TraceEntry]:
    with open(path) as fh:
        return parse_trace(fh)


def format_trace_entry(e: TraceEntry) -> str:
    return f"{e.bubble} {'W' if e.is_write else 'R'} 0x{e.address:X}"


def write_trace(path, entries, header_lines=()) -> None:
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for e in entries:
            fh.write(format_trace_entry(e) + "\n")


# -- core model -----------------------------------------------------------------

# Retire bandwidth in eighth-instructions per memory-command cycle:
# 4-wide retire at a 4.2 GHz core clock against the 1.6 GHz command clock
# is 4 * 21/8 = 10.5 instructions per command cycle.  Fractional headroom
# carries across cycles; a stall discards the carry.
EIGHTHS_PER_CYCLE = 84
ENTRY_EIGHTHS = 8
CORE_CYCLES_PER_DRAM_CYCLE = 21 / 8

BLOCKED_WINDOW = "window"
BLOCKED_QUEUE = "queue"


class Core:
    """Trace-driven front end for one hardware thread.

    Instructions come off the trace in order.  Bubbles only consume
    retire bandwidth.  A read occupies a window slot until its data
    returns (identical in-flight addresses coalesce into one request); a
    write retires once the write queue accepts it.  The core stalls when
    the window is full or its target queue is full.
    """

    def __init__(self, cid: int, entries, window: int = 128, inst_target=None, llc=None):
        self.cid = cid
        self.entries = entries
        self.window = window
        self.inst_target = inst_target
        self.idx = 0
        self.bubble_eighths = 0  # unconsumed bandwidth debt of the current bubble
        self.bubble_insts = 0
        self.in_access = False  # current entry's bubble consumed, access not yet issued
        self.t_cursor = 0
        self.budget = EIGHTHS_PER_CYCLE
        self.outstanding = 0
        self.pending: dict = {}
        self.retired = 0
        self.blocked = None
        self.fetch_done = False
        self.finish_cycle = None
        if llc:
            self.llc_lines = llc["lines"]
            self.llc_hit_cycles = llc.get("hit_cycles", 8)
            self.llc_tags = {}
        else:
            self.llc_lines = 0

    # engine hooks ----------------------------------------------------------------

    def next_time(self):
        if self.fetch_done or self.blocked is not None:
            return None
        return self.t_cursor

    def done(self) -> bool:
        return self.fetch_done and self.outstanding == 0

    def on_completion(self, address: int, t: int) -> None:
        slots = self.pending.pop(address)
        self.outstanding -= slots
        self.retired += slots
        self._maybe_finish(t)
        if self.blocked == BLOCKED_WINDOW:
            self._unstall(t)

    def on_queue_space(self, t: int) -> None:
        if self.blocked == BLOCKED_QUEUE:
            self._unstall(t)

    def _unstall(self, t: int) -> None:
        self.blocked = None
        self.t_cursor = max(self.t_cursor, t)
        self.budget = EIGHTHS_PER_CYCLE

    def _maybe_finish(self, t: int) -> None:
        if (
            self.inst_target is not None
            and self.finish_cycle is None
            and self.retired >= self.inst_target
        ):
            self.finish_cycle = t
            self.fetch_done = True

    def ipc(self, end_cycle: int) -> float:
        cycles = self.finish_cycle if self.finish_cycle is not None else end_cycle
        if cycles <= 0:
            return 0.0
        return self.retired / (cycles * CORE_CYCLES_PER_DRAM_CYCLE)

    # execution ----------------------------------------------------------------------

    def _consume_bubble(self, eighths: int, now: int) -> bool:
        """Burn retire bandwidth; False when the budget runs past ``now``."""
        while eighths:
            if self.budget >= eighths:
                self.budget -= eighths
                return True
            eighths -= self.budget
            self.budget = 0
            if self.t_cursor >= now:
                self.t_cursor = now + 1
                self.budget = EIGHTHS_PER_CYCLE
                self.bubble_eighths = eighths
                return False
            self.t_cursor += 1
            self.budget = EIGHTHS_PER_CYCLE
        return True

    def _ensure_slot(self, now: int) -> bool:
        """Guarantee one instruction's worth of budget at the cursor."""
        if self.budget >= ENTRY_EIGHTHS:
            return True
        if self.t_cursor >= now:
            self.t_cursor = now + 1
            self.budget += EIGHTHS_PER_CYCLE
            return False
        self.t_cursor += 1
        self.budget += EIGHTHS_PER_CYCLE
        return True

    def advance(self, now: int, engine) -> None:
        while not self.fetch_done and self.blocked is None and self.t_cursor <= now:
            if self.bubble_eighths:
                left = self.bubble_eighths
                self.bubble_eighths = 0
                if not self._consume_bubble(left, now):
                    return
                self.retired += self.bubble_insts
                self.bubble_insts = 0
                self._maybe_finish(self.t_cursor)
                continue
            if self.idx >= len(self.entries):
                self.fetch_done = True
                if self.finish_cycle is None:
                    self.finish_cycle = self.t_cursor
                return
            entry = self.entries[self.idx]
            if entry.bubble and not self.in_access:
                self.in_access = True
                self.bubble_insts = entry.bubble
                self.bubble_eighths = entry.bubble * ENTRY_EIGHTHS
                continue
            if not self._ensure_slot(now):
                return
            address = entry.address & ~(self.CACHELINE - 1)
            if entry.is_write:
                if not engine.core_enqueue(self, entry, self.t_cursor):
                    self.blocked = BLOCKED_QUEUE
                    return
                self.budget -= ENTRY_EIGHTHS
                self.retired += 1
                self._maybe_finish(self.t_cursor)
            else:
                if self.outstanding >= self.window:
                    self.blocked = BLOCKED_WINDOW
                    return
                if self.llc_lines and self._llc_lookup(address, engine):
                    self._finish_entry()
                    continue
                if address in self.pending:
                    self.pending[address] += 1
                    self.outstanding += 1
                    self.budget -= ENTRY_EIGHTHS
                else:
                    if not engine.core_enqueue(self, entry, self.t_cursor):
                        self.blocked = BLOCKED_QUEUE
                        return
                    self.pending[address] = 1
                    self.outstanding += 1
                    self.budget -= ENTRY_EIGHTHS
            self._finish_entry()

    CACHELINE = 64

    def _finish_entry(self) -> None:
        self.idx += 1
        self.in_access = False

    def _llc_lookup(self, address: int, engine) -> bool:
        tag = address >> 6
        slot = tag % self.llc_lines
        if self.llc_tags.get(slot) == tag:
            key = ("llc", address, self.idx)
            self.pending[key] = 1
            self.outstanding += 1
            engine.schedule_local(self, key, self.t_cursor + self.llc_hit_cycles)
            self.budget -= ENTRY_EIGHTHS
            return True
        self.llc_tags[slot] = tag
        return False


# -- generators --------------------------------------------------------------------


class GenResult(NamedTuple):
    entries: list[TraceEntry]
    window_hint: int
    meta: dict


class GenContext(NamedTuple):
    geometry: DramGeometry
    mapping: AddressMapping
    timing: TimingSet
    threshold: int | None


def _bank_address(ctx: GenContext, flat_bank: int, row: int, column: int = 0) -> int:
    rank, group, bank = ctx.geometry.unflatten_bank(flat_bank)
    return ctx.mapping.encode_coords(rank, group, bank, row, column)


def gen_two_row_alternation(ctx: GenContext, spec: dict) -> GenResult:
    bank = spec.get("bank", 0)
    rows = spec.get("rows")
    if rows is None:
        rows = [0, ctx.geometry.rows_per_bank // 2]
    if len(rows) != 2 or rows[0] == rows[1]:
        raise ConfigError("two_row_alternation needs two distinct rows")
    length = spec["length"]
    addrs = [_bank_address(ctx, bank, r) for r in rows]
    entries = [TraceEntry(0, False, addrs[i & 1]) for i in range(length)]
    return GenResult(entries, 2, {"bank": bank, "rows": list(rows)})


def flood_plan(ctx: GenContext, alerts_per_trefi: int, banks=None) -> tuple[list[int], int]:
    """Banks and lane count needed to sustain the requested alert rate."""
    if ctx.threshold is None:
        raise ConfigError("alert_flood requires an alert threshold")
    budget = acts_per_refresh_interval(ctx.timing)
    required = alerts_per_trefi * ctx.threshold
    banks_needed = max(1, math.ceil(required / budget))
    if banks is not None:
        if len(banks) < banks_needed:
            raise ConfigError(
                f"{alerts_per_trefi} alerts/tREFI at threshold {ctx.threshold} needs "
                f"{required} activations per interval but one bank fits {budget}; "
                f"spread over >= {banks_needed} banks"
            )
        chosen = list(banks)[:banks_needed]
    else:
        chosen = list(range(banks_needed))
    lanes = max(alerts_per_trefi, banks_needed)
    return chosen, lanes


def gen_alert_flood(ctx: GenContext, spec: dict) -> GenResult:
    alerts = spec["alerts_per_trefi"]
    if alerts not in (1, 2, 3):
        raise ConfigError("alerts_per_trefi must be 1, 2 or 3")
    banks, lanes = flood_plan(ctx, alerts, spec.get("banks"))
    length = spec["length"]
    per_bank = -(-lanes // len(banks))
    pitch = ctx.geometry.rows_per_bank // per_bank
    lane_addrs = []
    for lane in range(lanes):
        bank = banks[lane % len(banks)]
        slot = lane // len(banks)
        r1 = slot * pitch
        r2 = r1 + pitch // 2
        lane_addrs.append(
            (_bank_address(ctx, bank, r1), _bank_address(ctx, bank, r2))
        )
    entries = []
    flip = [0] * lanes
    lane = 0
    for _ in range(length):
        pair = lane_addrs[lane]
        entries.append(TraceEntry(0, False, pair[flip[lane]]))
        flip[lane] ^= 1
        lane = (lane + 1) % lanes
    return GenResult(
        entries,
        len(banks) + 1,
        {"banks": banks, "lanes": lanes, "alerts_per_trefi": alerts},
    )


def gen_tsa(ctx: GenContext, spec: dict) -> GenResult:
    banks = spec.get("banks")
    if banks is None:
        banks = list(range(spec.get("bank_count", 4)))
    if ctx.threshold is None:
        raise ConfigError("tsa requires an alert threshold")
    length = spec["length"]
    # Enough activations per visit to force a crossing even when earlier
    # recoveries keep resetting the pair's maximum.
    visit = 3 * ctx.threshold
    rows = (0, ctx.geometry.rows_per_bank // 2)
    entries = []
    bi = 0
    while len(entries) < length:
        bank = banks[bi % len(banks)]
        a = (_bank_address(ctx, bank, rows[0]), _bank_address(ctx, bank, rows[1]))
        for i in range(min(visit, length - len(entries))):
            entries.append(TraceEntry(0, False, a[i & 1]))
        bi += 1
    return GenResult(entries, 2, {"banks": banks, "visit": visit})


def gen_synthetic(ctx: GenContext, spec: dict) -> GenResult:
    import random as _random

    kind = spec["kind"]
    length = spec["length"]
    bubble = spec.get("bubble", 0)
    g = ctx.geometry
    if kind == "stream":
        start = spec.get("start", 0)
        entries = [
            TraceEntry(bubble, False, (start + i * g.cacheline_bytes) % g.capacity_bytes)
            for i in range(length)
        ]
        return GenResult(entries, 128, {"kind": kind})
    if kind == "random":
        rng = _random.Random(spec["seed"])
        banks = spec.get("banks")
        write_ratio = spec.get("write_ratio", 0.0)
        entries = []
        for _ in range(length):
            if banks is not None:
                fb = banks[rng.randrange(len(banks))]
            else:
                fb = rng.randrange(g.banks_per_channel)
            row = rng.randrange(g.rows_per_bank)
            col = rng.randrange(g.columns_per_row)
            is_write = rng.random() < write_ratio
            entries.append(TraceEntry(bubble, is_write, _bank_address(ctx, fb, row, col)))
        return GenResult(entries, 128, {"kind": kind, "banks": banks})
    if kind in ("subarray_disjoint", "subarray_conflicting"):
        bank = spec.get("bank", 0)
        if kind == "subarray_disjoint":
            rows = (0, 2 * g.rows_per_subarray)
        else:
            rows = (0, 1) if g.rows_per_subarray > 1 else (0, 0)
        if kind == "subarray_conflicting" and rows[0] == rows[1]:
            raise ConfigError("geometry too small for a conflicting pair")
        addrs = [_bank_address(ctx, bank, r) for r in rows]
        entries = [TraceEntry(bubble, False, addrs[i & 1]) for i in range(length)]
        return GenResult(entries, 2, {"kind": kind, "bank": bank, "rows": list(rows)})
    raise ConfigError(f"unknown synthetic kind {kind!r}")


GENERATORS = {
    "two_row_alternation": gen_two_row_alternation,
    "alert_flood": gen_alert_flood,
    "tsa": gen_tsa,
    "stream": gen_synthetic,
    "random": gen_synthetic,
    "subarray_disjoint": gen_synthetic,
    "subarray_conflicting": gen_synthetic,
}


def generate(spec: dict, ctx: GenContext) -> GenResult:
    name = spec.get("generator")
    if name not in GENERATORS:
        raise ConfigError(f"unknown generator {name!r}")
    fn = GENERATORS[name]
    if fn is gen_synthetic:
        spec = dict(spec, kind=name)
    return fn(ctx, spec)
