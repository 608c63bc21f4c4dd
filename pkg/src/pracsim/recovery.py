"""Alert back-off protocol: alerts, recovery commands, and mitigation.

A counter crossing its trigger level raises an alert to the controller
(when the alert gate is open; otherwise it is latched).  The controller
then runs a fixed pre-recovery window during which it keeps serving,
followed by ``n_rfm`` back-to-back refresh-management commands.  Under
the channel-wide scheme every bank is stalled for the whole recovery;
under the masked scheme the first command returns the bank-alert
register and only flagged banks stall and mitigate, apart from a short
conservative stall while the register contents are in flight.  The gate
reopens after the commands complete and one further activation issues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .commands import EV_ALERT, EV_MITIGATE, RFM_AB, RFM_MASK
from .timing import PRAC_TIMING, TimingSet

MECH_BASELINE = "baseline"
MECH_PRAC_OPP = "prac_abo_opportunistic"
MECH_PRAC_PRO = "prac_abo_prohibitive"
MECH_PRACTICAL = "practical"
MECHANISMS = (MECH_BASELINE, MECH_PRAC_OPP, MECH_PRAC_PRO, MECH_PRACTICAL)

POLICY_OPPORTUNISTIC = "opportunistic"
POLICY_PROHIBITIVE = "prohibitive"

IDLE = "idle"
PREREC = "pre_recovery"
ACTIVE = "recovering"


class ConfigError(ValueError):
    pass


def effective_threshold(threshold: int, t_rfm_ns: float, t_rc_ns: float) -> int:
    """Alert trigger level lowered by the worst-case in-flight activations.

    While one recovery command runs, an unstalled bank can absorb up to
    floor(tRFM / tRC) further activations, so rows may overshoot the
    trigger by that count minus one before their bank is serviced.
    """
    n_act = math.floor(t_rfm_ns / t_rc_ns)
    if threshold <= n_act:
        raise ConfigError(
            f"threshold {threshold} too small: must exceed floor(tRFM/tRC) = {n_act}"
        )
    return threshold - (n_act - 1)


def select_victims(aggressor_row: int, blast_radius: int, rows_per_bank: int) -> list[int]:
    """Rows refreshed when mitigating an aggressor, clipped at bank edges."""
    lo = max(0, aggressor_row - blast_radius)
    hi = min(rows_per_bank - 1, aggressor_row + blast_radius)
    return [r for r in range(lo, hi + 1) if r != aggressor_row]


class BaRegister:
    """One bit per bank, set by the owning bank, cleared atomically on read."""

    def __init__(self):
        self._bits: set[int] = set()

    def set_bit(self, bank: int) -> None:
        self._bits.add(bank)

    def read_and_clear(self) -> tuple[int, ...]:
        snapshot = tuple(sorted(self._bits))
        self._bits.clear()
        return snapshot

    def __len__(self):
        return len(self._bits)


@dataclass(frozen=True)
class RecoveryConfig:
    mechanism: str
    n_rfm: int = 1
    threshold: int | None = None
    policy: str = POLICY_OPPORTUNISTIC
    blast_radius: int = 1

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ConfigError(f"unknown mechanism {self.mechanism!r}")
        if self.n_rfm not in (1, 2, 4):
            raise ConfigError(f"n_rfm must be one of 1, 2, 4 (got {self.n_rfm})")
        if self.policy not in (POLICY_OPPORTUNISTIC, POLICY_PROHIBITIVE):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.blast_radius < 1:
            raise ConfigError("blast_radius must be >= 1")


class RecoveryMachine:
    """Protocol state machine for one simulation instance."""

    def __init__(self, cfg: RecoveryConfig, geometry, timing: TimingSet, kernel, telemetry, log):
        if cfg.threshold is None:
            raise ConfigError("recovery machine requires an alert threshold")
        self.cfg = cfg
        self.geometry = geometry
        self.kernel = kernel
        self.telemetry = telemetry
        self.log = log
        self.masked = cfg.mechanism == MECH_PRACTICAL
        if self.masked:
            self.trigger = effective_threshold(cfg.threshold, timing.tRFM, timing.tRC)
        else:
            self.trigger = cfg.threshold
        # Level above which a mitigation counts as strictly needed, and the
        # prohibitive-policy gate.  The masked scheme flags banks at its
        # lowered trigger, so need is judged there as well.
        self.need_level = self.trigger if self.masked else cfg.threshold
        self.prerec_c = timing.cycles("tPreRecovery")
        self.rfm_c = timing.cycles("tRFM")
        self.regread_c = timing.cycles("tRegRead")
        self.nbanks = geometry.banks_per_channel

        self.phase = IDLE
        self.pending = False
        self.acts_since_recovery = 1  # gate open at boot
        self.ba = BaRegister()
        self.mask: tuple[int, ...] | None = None
        self.prerec_end = 0
        self.start = 0
        self.issued = 0
        self.mitigated = 0

    # -- inputs ---------------------------------------------------------------

    def on_counter_commit(self, bank: int, row: int, value: int, t: int) -> None:
        if value < self.trigger:
            return
        if self.masked:
            self.ba.set_bit(bank)
        if self.phase == IDLE and self.acts_since_recovery >= 1:
            self._fire(t)
        else:
            self.pending = True

    def on_act(self, t: int) -> None:
        if self.phase != IDLE:
            return
        self.acts_since_recovery += 1
        if self.pending:
            self._fire(t)

    def _fire(self, t: int) -> None:
        self.phase = PREREC
        self.pending = False
        self.prerec_end = t + self.prerec_c
        self.telemetry.alerts += 1
        self.log.append((t, EV_ALERT, 0, ()))

    # -- scheduled transitions ----------------------------------------------------

    def next_event_time(self):
        if self.phase == PREREC:
            return self.prerec_end
        if self.phase == ACTIVE:
            if self.issued < self.cfg.n_rfm and self.issued == self.mitigated:
                return self.start + self.issued * self.rfm_c
            if self.mitigated < self.issued:
                return self.start + (self.mitigated + 1) * self.rfm_c
        return None

    def step(self, t: int) -> None:
        if self.phase == PREREC and t >= self.prerec_end:
            self.phase = ACTIVE
            self.start = self.prerec_end
            self.issued = 0
            self.mitigated = 0
            self.mask = None
        if self.phase == ACTIVE:
            while (
                self.mitigated < self.issued
                and self.start + (self.mitigated + 1) * self.rfm_c <= t
            ):
                self._mitigate_window(self.start + (self.mitigated + 1) * self.rfm_c)

    def rfm_due(self, t: int):
        """Time of the next recovery command if it is due at or before t."""
        if self.phase != ACTIVE or self.issued >= self.cfg.n_rfm:
            return None
        if self.issued != self.mitigated:
            return None
        due = self.start + self.issued * self.rfm_c
        return due if due <= t else None

    def issue_rfm(self, t: int) -> None:
        idx = self.issued
        recovery_end = self.start + self.cfg.n_rfm * self.rfm_c
        if idx == 0:
            if self.masked:
                self.mask = self.ba.read_and_clear()
                if not self.mask:
                    self.telemetry.anomalies += 1
                # conservative stall while the register contents travel
                for b in range(self.nbanks):
                    self.kernel.block(b, t + self.regread_c, t)
                for b in self.mask:
                    self.kernel.block(b, recovery_end, t)
                self.telemetry.record_recovery(len(self.mask), self.mask)
            else:
                for b in range(self.nbanks):
                    self.kernel.block(b, recovery_end, t)
                needing = sum(
                    1
                    for b in range(self.nbanks)
                    if self.kernel.counter_max(b)[1] >= self.cfg.threshold
                )
                self.telemetry.record_recovery(needing, None)
        kind = RFM_MASK if self.masked else RFM_AB
        payload = (idx, self.cfg.n_rfm, self.mask if self.masked else None)
        self.log.append((t, kind, idx, payload))
        self.telemetry.rfm_commands += 1
        self.issued += 1

    def _mitigate_window(self, t: int) -> None:
        scope = self.mask if self.masked else range(self.nbanks)
        opportunistic = self.cfg.policy == POLICY_OPPORTUNISTIC
        for bank in scope:
            row, value = self.kernel.counter_max(bank)
            needed = value >= self.need_level
            if not (opportunistic or needed):
                continue  # prohibitive: the bank idles out the window
            victims = select_victims(row, self.cfg.blast_radius, self.geometry.rows_per_bank)
            self.telemetry.refreshes_performed += len(victims)
            if needed:
                self.telemetry.refreshes_needed += len(victims)
            self.kernel.counter_reset(bank, row)
            self.log.append((t, EV_MITIGATE, bank, (row, tuple(victims), needed)))
        self.mitigated += 1
        if self.mitigated == self.cfg.n_rfm:
            self.phase = IDLE
            self.acts_since_recovery = 0
            self.mask = None

    # -- recovery-driven precharges -------------------------------------------------

    def close_scope(self, t: int):
        """Banks the recovery itself must precharge before mitigating."""
        if self.phase != ACTIVE or self.issued == 0:
            return ()
        if self.masked:
            if t < self.start + self.regread_c:
                return ()
            return self.mask
        return range(self.nbanks)
