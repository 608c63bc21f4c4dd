# cython: language_level=3
"""Compiled channel kernel; semantics identical to ``_kernel_py``."""

from libc.stdlib cimport calloc, free, malloc

BACKEND = "cython"

NEED_CAS = 0
NEED_ACT = 1
NEED_PRE = 2

cdef long long _NEVER = -(<long long>1 << 40)
cdef int _MAX_WINDOWS = 16


cdef class ChannelKernel:
    cdef public int nbanks, rows_per_bank, rows_per_subarray, nsubs
    cdef public long long t_ras, t_rcd, t_rtp, t_wr, act_rp, act_rc, upd_cycles
    cdef public bint practical, counters_on
    cdef public long long counter_sat
    cdef long long *_open_row
    cdef long long *_open_sub
    cdef long long *_last_act
    cdef long long *_last_rd
    cdef long long *_last_wr
    cdef long long *_ready_act
    cdef long long *_blocked
    cdef long long *_stall
    cdef long long *_win_lo
    cdef long long *_win_hi
    cdef long long *_win_until
    cdef int *_win_count
    cdef long long **_tree
    cdef long long _max_seen

    def __cinit__(
        self,
        int nbanks,
        int rows_per_bank,
        int rows_per_subarray,
        long long t_ras,
        long long t_rcd,
        long long t_rtp,
        long long t_wr,
        long long act_rp,
        long long act_rc,
        bint practical,
        long long upd_cycles,
        bint counters_on,
        long long counter_sat,
    ):
        cdef int i
        self.nbanks = nbanks
        self.rows_per_bank = rows_per_bank
        self.rows_per_subarray = rows_per_subarray
        self.nsubs = rows_per_bank // rows_per_subarray
        self.t_ras = t_ras
        self.t_rcd = t_rcd
        self.t_rtp = t_rtp
        self.t_wr = t_wr
        self.act_rp = act_rp
        self.act_rc = act_rc
        self.practical = practical
        self.upd_cycles = upd_cycles
        self.counters_on = counters_on
        self.counter_sat = counter_sat
        self._max_seen = 0

        self._open_row = <long long *>malloc(nbanks * sizeof(long long))
        self._open_sub = <long long *>malloc(nbanks * sizeof(long long))
        self._last_act = <long long *>malloc(nbanks * sizeof(long long))
        self._last_rd = <long long *>malloc(nbanks * sizeof(long long))
        self._last_wr = <long long *>malloc(nbanks * sizeof(long long))
        self._ready_act = <long long *>calloc(nbanks, sizeof(long long))
        self._blocked = <long long *>calloc(nbanks, sizeof(long long))
        self._stall = <long long *>calloc(nbanks, sizeof(long long))
        self._win_lo = <long long *>calloc(nbanks * _MAX_WINDOWS, sizeof(long long))
        self._win_hi = <long long *>calloc(nbanks * _MAX_WINDOWS, sizeof(long long))
        self._win_until = <long long *>calloc(nbanks * _MAX_WINDOWS, sizeof(long long))
        self._win_count = <int *>calloc(nbanks, sizeof(int))
        self._tree = <long long **>calloc(nbanks, sizeof(long long *))
        for i in range(nbanks):
            self._open_row[i] = -1
            self._open_sub[i] = -1
            self._last_act[i] = _NEVER
            self._last_rd[i] = _NEVER
            self._last_wr[i] = _NEVER

    def __dealloc__(self):
        cdef int i
        if self._tree != NULL:
            for i in range(self.nbanks):
                if self._tree[i] != NULL:
                    free(self._tree[i])
            free(self._tree)
        free(self._open_row)
        free(self._open_sub)
        free(self._last_act)
        free(self._last_rd)
        free(self._last_wr)
        free(self._ready_act)
        free(self._blocked)
        free(self._stall)
        free(self._win_lo)
        free(self._win_hi)
        free(self._win_until)
        free(self._win_count)

    # -- bank state queries ---------------------------------------------------

    cpdef long long open_row(self, int b):
        return self._open_row[b]

    cpdef long long open_subarray(self, int b):
        return self._open_sub[b]

    cpdef bint is_blocked(self, int b, long long t):
        return self._blocked[b] > t

    cpdef long long blocked_until(self, int b):
        return self._blocked[b]

    cpdef long long stall_cycles(self, int b):
        return self._stall[b]

    cpdef bint bank_ready_for_ref(self, int b, long long t):
        return (
            self._open_row[b] < 0
            and t >= self._ready_act[b]
            and t >= self._blocked[b]
        )

    # -- earliest legal issue times ---------------------------------------------

    cpdef long long earliest_act(self, int b, long long sub, long long now):
        cdef long long t = now
        cdef long long v
        cdef int i, base, n
        if self._blocked[b] > t:
            t = self._blocked[b]
        v = self._last_act[b] + self.act_rc
        if v > t:
            t = v
        if self._ready_act[b] > t:
            t = self._ready_act[b]
        if self.practical:
            base = b * _MAX_WINDOWS
            n = self._win_count[b]
            for i in range(n):
                if (
                    self._win_until[base + i] > t
                    and self._win_lo[base + i] <= sub <= self._win_hi[base + i]
                ):
                    t = self._win_until[base + i]
        return t

    cpdef long long earliest_cas(self, int b, long long now):
        cdef long long t = now
        cdef long long v
        if self._blocked[b] > t:
            t = self._blocked[b]
        v = self._last_act[b] + self.t_rcd
        if v > t:
            t = v
        return t

    cpdef long long earliest_pre(self, int b, long long now, bint ignore_block=False):
        cdef long long t = now
        cdef long long v
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

    cpdef tuple entry_state(self, int b, long long row, long long now):
        cdef long long orow = self._open_row[b]
        if orow == row:
            return NEED_CAS, self.earliest_cas(b, now)
        if orow < 0:
            return NEED_ACT, self.earliest_act(b, row // self.rows_per_subarray, now)
        return NEED_PRE, self.earliest_pre(b, now)

    # -- state transitions --------------------------------------------------------

    cpdef do_act(self, int b, long long row, long long sub, long long t):
        if self._open_row[b] >= 0:
            raise ValueError(f"ACT on bank {b} with row {self._open_row[b]} open")
        self._open_row[b] = row
        self._open_sub[b] = sub
        self._last_act[b] = t

    cpdef do_rd(self, int b, long long t):
        self._last_rd[b] = t

    cpdef do_wr(self, int b, long long t):
        self._last_wr[b] = t

    cpdef tuple do_pre(self, int b, long long t):
        cdef long long row = self._open_row[b]
        cdef long long sub, value, lo, hi
        cdef int base, n, i, k
        if row < 0:
            raise ValueError(f"PRE on idle bank {b}")
        sub = self._open_sub[b]
        self._open_row[b] = -1
        self._open_sub[b] = -1
        self._ready_act[b] = t + self.act_rp
        value = -1
        if self.counters_on:
            value = self._counter_inc(b, <int>row)
        if self.practical:
            base = b * _MAX_WINDOWS
            n = self._win_count[b]
            k = 0
            for i in range(n):
                if self._win_until[base + i] > t:
                    self._win_lo[base + k] = self._win_lo[base + i]
                    self._win_hi[base + k] = self._win_hi[base + i]
                    self._win_until[base + k] = self._win_until[base + i]
                    k += 1
            if k >= _MAX_WINDOWS:
                raise ValueError("occupancy window overflow")
            lo = sub - 1 if sub > 0 else 0
            hi = sub + 1 if sub + 1 < self.nsubs else self.nsubs - 1
            self._win_lo[base + k] = lo
            self._win_hi[base + k] = hi
            self._win_until[base + k] = t + self.upd_cycles
            self._win_count[b] = k + 1
        return row, value

    cpdef block(self, int b, long long until, long long now):
        cdef long long base
        if until > self._blocked[b]:
            base = self._blocked[b] if self._blocked[b] > now else now
            self._stall[b] += until - base
            self._blocked[b] = until

    # -- activation counters ---------------------------------------------------------

    cdef long long *_bank_tree(self, int b):
        cdef long long *tree = self._tree[b]
        if tree == NULL:
            tree = <long long *>calloc(2 * self.rows_per_bank, sizeof(long long))
            self._tree[b] = tree
        return tree

    cdef long long _counter_inc(self, int b, int row):
        cdef long long *tree = self._bank_tree(b)
        cdef int n = self.rows_per_bank
        cdef int i = n + row
        cdef long long v = tree[i]
        cdef long long m, r
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

    cpdef long long counter_value(self, int b, int row):
        if self._tree[b] == NULL:
            return 0
        return self._tree[b][self.rows_per_bank + row]

    cpdef counter_reset(self, int b, int row):
        cdef long long *tree = self._tree[b]
        cdef int n = self.rows_per_bank
        cdef int i
        cdef long long m, r
        if tree == NULL:
            return
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

    cpdef counter_reset_range(self, int b, int row_lo, int row_hi):
        cdef int row
        for row in range(row_lo, row_hi):
            self.counter_reset(b, row)

    cpdef tuple counter_max(self, int b):
        cdef long long *tree = self._tree[b]
        cdef long long v
        cdef int i, n
        if tree == NULL or tree[1] == 0:
            return 0, 0
        v = tree[1]
        i = 1
        n = self.rows_per_bank
        while i < n:
            i *= 2
            if tree[i] != v:
                i += 1
        return i - n, v

    def counter_nonzero(self, int b):
        cdef long long *tree = self._tree[b]
        cdef int n = self.rows_per_bank
        cdef int r
        if tree == NULL:
            return []
        return [(r, tree[n + r]) for r in range(n) if tree[n + r]]

    cpdef long long max_counter_seen(self):
        return self._max_seen
