"""Pure-Python channel kernel.

Holds the per-bank timing state machine, subarray occupancy windows and
the per-row activation counters, and answers the two questions the
scheduler asks for every queued request on every arbitration pass: what
command does this request need next, and when is it legal.  This is the
hot inner loop of a simulation; a compiled twin with identical semantics
lives in ``_kernel.pyx`` and the ``kernel`` module picks between them.

Counter tables are maintained as one max-segment-tree per bank so that
increments are O(log rows) and the running bank maximum (ties broken
toward the lowest row) is available without rescans.
"""

BACKEND = "python"

NEED_CAS = 0
NEED_ACT = 1
NEED_PRE = 2

_NEVER = -(1 << 40)


class ChannelKernel:
    def __init__(
        self,
        nbanks,
        rows_per_bank,
        rows_per_subarray,
        t_ras,
        t_rcd,
        t_rtp,
        t_wr,
        act_rp,
        act_rc,
        practical,
        upd_cycles,
        counters_on,
        counter_sat,
    ):
        self.nbanks = nbanks
        self.rows_per_bank = rows_per_bank
        self.rows_per_subarray = rows_per_subarray
        self.nsubs = rows_per_bank // rows_per_subarray
        self.t_ras = t_ras
        self.t_rcd = t_rcd
        self.t_rtp = t_rtp
        self.t_wr = t_wr
        # PRE->ACT / ACT->ACT gaps on the fast path.  When subarray-level
        # counter updates are enabled these are the plain-preset values and
        # the occupancy windows supply the slow (conflicting) path.
        self.act_rp = act_rp
        self.act_rc = act_rc
        self.practical = practical
        self.upd_cycles = upd_cycles
        self.counters_on = counters_on
        self.counter_sat = counter_sat

        self._open_row = [-1] * nbanks
        self._open_sub = [-1] * nbanks
        self._last_act = [_NEVER] * nbanks
        self._last_rd = [_NEVER] * nbanks
        self._last_wr = [_NEVER] * nbanks
        self._ready_act = [0] * nbanks  # precharge completion
        self._blocked = [0] * nbanks
        self._stall = [0] * nbanks
        self._windows = [[] for _ in range(nbanks)]
        # counter segment trees, allocated on first use per bank
        self._tree = [None] * nbanks
        self._max_seen = 0

    # -- bank state queries -------------------------------------------------

    def open_row(self, b):
        return self._open_row[b]

    def open_subarray(self, b):
        return self._open_sub[b]

    def is_blocked(self, b, t):
        return self._blocked[b] > t

    def blocked_until(self, b):
        return self._blocked[b]

    def stall_cycles(self, b):
        return self._stall[b]

    def bank_ready_for_ref(self, b, t):
        return (
            self._open_row[b] < 0
            and t >= self._ready_act[b]
            and t >= self._blocked[b]
        )

    # -- earliest legal issue times ------------------------------------------

    def earliest_act(self, b, sub, now):
        t = now
        if self._blocked[b] > t:
            t = self._blocked[b]
        v = self._last_act[b] + self.act_rc
        if v > t:
            t = v
        if self._ready_act[b] > t:
            t = self._ready_act[b]
        if self.practical:
            for lo, hi, until in self._windows[b]:
                if until > t and lo <= sub <= hi:
                    t = until
        return t

    def earliest_cas(self, b, now):
        t = now
        if self._blocked[b] > t:
            t = self._blocked[b]
        v = self._last_act[b] + self.t_rcd
        if v > t:
            t = v
        return t

    def earliest_pre(self, b, now, ignore_block=False):
        t = now
        if not ignore_block and self._blocked[b] > t:
            t = self._blocked[b]
        v = self._last_act[b] + self.t_ras
        if v > t:
            t = v
        v = self._last_rd[b] + self.t_rtp
        if v > t:
            t = v
        v = self._last_wr[b] + self.t_wr
        if v > t:
            t = v
        return t

    def entry_state(self, b, row, now):
        """Next command a request for (bank, row) needs, and when it is legal."""
        orow = self._open_row[b]
        if orow == row:
            return NEED_CAS, self.earliest_cas(b, now)
        if orow < 0:
            return NEED_ACT, self.earliest_act(b, row // self.rows_per_subarray, now)
        return NEED_PRE, self.earliest_pre(b, now)

    # -- state transitions ----------------------------------------------------

    def do_act(self, b, row, sub, t):
        if self._open_row[b] >= 0:
            raise ValueError(f"ACT on bank {b} with row {self._open_row[b]} open")
        self._open_row[b] = row
        self._open_sub[b] = sub
        self._last_act[b] = t

    def do_rd(self, b, t):
        self._last_rd[b] = t

    def do_wr(self, b, t):
        self._last_wr[b] = t

    def do_pre(self, b, t):
        """Close the open row.  Returns (row, new counter value or -1)."""
        row = self._open_row[b]
        if row < 0:
            raise ValueError(f"PRE on idle bank {b}")
        sub = self._open_sub[b]
        self._open_row[b] = -1
        self._open_sub[b] = -1
        self._ready_act[b] = t + self.act_rp
        value = -1
        if self.counters_on:
            value = self._counter_inc(b, row)
        if self.practical:
            wins = self._windows[b]
            if wins:
                wins[:] = [w for w in wins if w[2] > t]
            lo = sub - 1 if sub > 0 else 0
            hi = sub + 1 if sub + 1 < self.nsubs else self.nsubs - 1
            wins.append((lo, hi, t + self.upd_cycles))
        return row, value

    def block(self, b, until, now):
        """Make the bank unavailable until ``until``; accounts stall time."""
        if until > self._blocked[b]:
            base = self._blocked[b] if self._blocked[b] > now else now
            self._stall[b] += until - base
            self._blocked[b] = until

    # -- activation counters ----------------------------------------------------

    def _bank_tree(self, b):
        tree = self._tree[b]
        if tree is None:
            tree = [0] * (2 * self.rows_per_bank)
            self._tree[b] = tree
        return tree

    def _counter_inc(self, b, row):
        tree = self._bank_tree(b)
        n = self.rows_per_bank
        i = n + row
        v = tree[i]
        if v >= self.counter_sat:
            return v
        v += 1
        tree[i] = v
        if v > self._max_seen:
            self._max_seen = v
        i >>= 1
        while i:
            m = tree[2 * i]
            r = tree[2 * i + 1]
            if r > m:
                m = r
            if tree[i] == m:
                break
            tree[i] = m
            i >>= 1
        return v

    def counter_value(self, b, row):
        tree = self._tree[b]
        if tree is None:
            return 0
        return tree[self.rows_per_bank + row]

    def counter_reset(self, b, row):
        tree = self._tree[b]
        if tree is None:
            return
        n = self.rows_per_bank
        i = n + row
        if tree[i] == 0:
            return
        tree[i] = 0
        i >>= 1
        while i:
            m = tree[2 * i]
            r = tree[2 * i + 1]
            if r > m:
                m = r
            if tree[i] == m:
                break
            tree[i] = m
            i >>= 1

    def counter_reset_range(self, b, row_lo, row_hi):
        """Reset counters for rows in [row_lo, row_hi)."""
        for row in range(row_lo, row_hi):
            self.counter_reset(b, row)

    def counter_max(self, b):
        """(row, value) with the largest counter; ties go to the lowest row."""
        tree = self._tree[b]
        if tree is None or tree[1] == 0:
            return 0, 0
        v = tree[1]
        i = 1
        n = self.rows_per_bank
        while i < n:
            i *= 2
            if tree[i] != v:
                i += 1
        return i - n, v

    def counter_nonzero(self, b):
        tree = self._tree[b]
        if tree is None:
            return []
        n = self.rows_per_bank
        return [(r, tree[n + r]) for r in range(n) if tree[n + r]]

    def max_counter_seen(self):
        return self._max_seen
