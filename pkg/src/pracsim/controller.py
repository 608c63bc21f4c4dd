"""Request queues, FR-FCFS + Cap arbitration, and eager refresh.

Arbitration contract (shared verbatim with the naive reference model):

* at most one command issues per channel per cycle;
* bus priority: recovery command > REF > recovery precharge > refresh
  precharge > scheduler grant;
* a rank with a refresh pending quiesces: no scheduler grants to its
  banks until the REF has issued;
* scheduler pool: the write queue while draining (entered at >= 28
  write-queue entries, left at <= 16), otherwise the read queue, or the
  write queue when no read is waiting;
* within the pool, first-ready row hits win, oldest first, unless the
  hit's bank has taken 4 consecutive CAS grants - then the oldest
  issuable request wins and that bank's streak resets;
* a granted request contributes exactly one command per grant (PRE for a
  conflict, ACT for a closed bank, RD/WR once its row is open).
"""

from __future__ import annotations

from .commands import MemRequest
from .geometry import DramGeometry
from .kernel import NEED_ACT, NEED_CAS, NEED_PRE
from .timing import TimingSet

READ_Q = 32
WRITE_Q = 32
HIT_CAP = 4
DRAIN_HIGH = 28
DRAIN_LOW = 16


class Controller:
    def __init__(self, geometry: DramGeometry, timing: TimingSet, kernel):
        self.geometry = geometry
        self.kernel = kernel
        self.readq: list[MemRequest] = []
        self.writeq: list[MemRequest] = []
        self.hit_count = [0] * geometry.banks_per_channel
        self.drain = False

        self.t_refi = timing.cycles("tREFI")
        self.t_rfc = timing.cycles("tRFC")
        ranks = geometry.ranks_per_channel
        self.next_boundary = [self.t_refi] * ranks
        self.ref_pending = [0] * ranks
        self.rows_per_group = max(1, geometry.rows_per_bank // 8192)
        self.n_groups = geometry.rows_per_bank // self.rows_per_group
        self.group_ptr = [0] * ranks
        self.refs_issued = 0

    # -- queues -------------------------------------------------------------

    def queue_has_space(self, is_write: bool) -> bool:
        if is_write:
            return len(self.writeq) < WRITE_Q
        return len(self.readq) < READ_Q

    def enqueue(self, req: MemRequest) -> bool:
        if req.is_write:
            if len(self.writeq) >= WRITE_Q:
                return False
            self.writeq.append(req)
            if len(self.writeq) >= DRAIN_HIGH:
                self.drain = True
        else:
            if len(self.readq) >= READ_Q:
                return False
            self.readq.append(req)
        return True

    def _dequeue(self, req: MemRequest) -> None:
        if req.is_write:
            self.writeq.remove(req)
            if self.drain and len(self.writeq) <= DRAIN_LOW:
                self.drain = False
        else:
            self.readq.remove(req)

    # -- refresh ---------------------------------------------------------------

    def latch_refresh(self, t: int) -> None:
        for rank in range(len(self.next_boundary)):
            while t >= self.next_boundary[rank]:
                self.ref_pending[rank] += 1
                self.next_boundary[rank] += self.t_refi

    def rank_banks(self, rank: int):
        per = self.geometry.banks_per_rank
        return range(rank * per, (rank + 1) * per)

    def ready_ref_rank(self, t: int):
        for rank, pending in enumerate(self.ref_pending):
            if pending and all(
                self.kernel.bank_ready_for_ref(b, t) for b in self.rank_banks(rank)
            ):
                return rank
        return None

    def issue_ref(self, rank: int, t: int, reset_counters: bool) -> int:
        """Apply one REF; returns the refresh group index it covered."""
        for b in self.rank_banks(rank):
            self.kernel.block(b, t + self.t_rfc, t)
        ptr = self.group_ptr[rank]
        if reset_counters:
            lo = ptr * self.rows_per_group
            for b in self.rank_banks(rank):
                self.kernel.counter_reset_range(b, lo, lo + self.rows_per_group)
        self.group_ptr[rank] = (ptr + 1) % self.n_groups
        self.ref_pending[rank] -= 1
        self.refs_issued += 1
        return ptr

    def ref_close_candidate(self, t: int):
        """(bank, time) for the next refresh-driven precharge.

        Returns the first bank that can be closed now, else the earliest
        future time any such precharge becomes legal.
        """
        future = None
        for rank, pending in enumerate(self.ref_pending):
            if not pending:
                continue
            for b in self.rank_banks(rank):
                if self.kernel.open_row(b) < 0 or self.kernel.is_blocked(b, t):
                    continue
                ready = self.kernel.earliest_pre(b, t)
                if ready <= t:
                    return b, t
                if future is None or ready < future:
                    future = ready
        return None, future

    def ref_ready_candidate(self, t: int):
        """Earliest future time a pending REF could issue (banks all closed)."""
        best = None
        for rank, pending in enumerate(self.ref_pending):
            if not pending:
                continue
            worst = t
            ok = True
            for b in self.rank_banks(rank):
                if self.kernel.open_row(b) >= 0:
                    ok = False
                    break
                ready = max(self.kernel.blocked_until(b), t)
                worst = max(worst, ready)
            if ok and (best is None or worst < best):
                best = worst
        return best

    def _rank_quiesced(self, bank: int) -> bool:
        return self.ref_pending[bank // self.geometry.banks_per_rank] > 0

    # -- scheduler ---------------------------------------------------------------

    def pick(self, t: int):
        """FR-FCFS + Cap selection over the active pool.

        Returns ``(request, need, future)``: the grant (or None) plus the
        earliest future cycle at which some pool entry becomes issuable.
        """
        if self.drain:
            pool = self.writeq
        elif self.readq:
            pool = self.readq
        else:
            pool = self.writeq
        best_hit = None
        best_hit_need = None
        best_any = None
        best_any_need = None
        future = None
        for req in pool:
            if self._rank_quiesced(req.bank):
                continue
            need, ready = self.kernel.entry_state(req.bank, req.row, t)
            if ready > t:
                if future is None or ready < future:
                    future = ready
                continue
            if best_any is None:
                best_any, best_any_need = req, need
            if need == NEED_CAS and best_hit is None:
                best_hit, best_hit_need = req, need
                break  # oldest hit found; older non-hits already captured
        if best_hit is not None and self.hit_count[best_hit.bank] < HIT_CAP:
            return best_hit, best_hit_need, future
        if best_hit is not None:
            # cap trips: oldest issuable request wins, streak resets
            self.hit_count[best_hit.bank] = 0
        return best_any, best_any_need, future

    def on_grant(self, req: MemRequest, need: int) -> None:
        if need == NEED_CAS:
            self.hit_count[req.bank] += 1
            self._dequeue(req)
        else:
            self.hit_count[req.bank] = 0
