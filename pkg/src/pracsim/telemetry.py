"""Run statistics, energy accounting, and report emission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

CSV_COLUMNS = [
    "mechanism",
    "n_rfm",
    "threshold",
    "workload",
    "ipc",
    "speedup",
    "alerts",
    "refreshes_performed",
    "refreshes_needed",
    "energy",
    "max_counter",
]

DEFAULT_ENERGY = {
    # arbitrary units; only ratios are meaningful
    "act_pre": 2.0,
    "rd": 1.0,
    "wr": 1.0,
    "ref": 64.0,
    "victim_refresh": 2.0,
}


@dataclass
class EnergyModel:
    act_pre: float = DEFAULT_ENERGY["act_pre"]
    rd: float = DEFAULT_ENERGY["rd"]
    wr: float = DEFAULT_ENERGY["wr"]
    ref: float = DEFAULT_ENERGY["ref"]
    victim_refresh: float = DEFAULT_ENERGY["victim_refresh"]

    def __post_init__(self):
        for name in ("act_pre", "rd", "wr", "ref", "victim_refresh"):
            if getattr(self, name) <= 0:
                raise ValueError(f"energy constant {name} must be positive")

    def total(self, st: "RunStats") -> float:
        return (
            st.acts * self.act_pre
            + st.rds * self.rd
            + st.wrs * self.wr
            + st.refs * self.ref
            + st.refreshes_performed * self.victim_refresh
        )


@dataclass
class RunStats:
    acts: int = 0
    pres: int = 0
    rds: int = 0
    wrs: int = 0
    refs: int = 0
    rfm_commands: int = 0
    alerts: int = 0
    anomalies: int = 0  # masked recoveries that found an empty register
    refreshes_performed: int = 0
    refreshes_needed: int = 0
    row_conflicts: int = 0
    subarray_conflicts: int = 0
    reads_done: int = 0
    writes_done: int = 0
    latency_sum: int = 0
    latency_max: int = 0
    banks_per_alert: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    elapsed_cycles: int = 0
    max_counter: int = 0
    stall_cycles: list = field(default_factory=list)
    per_core: list = field(default_factory=list)

    def record_recovery(self, needing: int, mask) -> None:
        self.banks_per_alert.append(needing)
        if mask is not None:
            self.masks.append(tuple(mask))

    def record_completion(self, latency: int) -> None:
        self.reads_done += 1
        self.latency_sum += latency
        if latency > self.latency_max:
            self.latency_max = latency

    @property
    def mean_banks_per_alert(self) -> float:
        if not self.banks_per_alert:
            return 0.0
        return sum(self.banks_per_alert) / len(self.banks_per_alert)

    @property
    def max_banks_per_alert(self) -> int:
        return max(self.banks_per_alert, default=0)

    def throughput(self) -> float:
        if self.elapsed_cycles <= 0:
            return 0.0
        return (self.reads_done + self.writes_done) / self.elapsed_cycles

    def aggregate_ipc(self) -> float:
        cores = [c for c in self.per_core if c.get("retired")]
        if not cores:
            return 0.0
        return sum(c["ipc"] for c in cores) / len(cores)

    def subarray_conflict_ratio(self) -> tuple[float, bool]:
        """Share of row-buffer conflicts that also contend at subarray level.

        The flag marks a degenerate run with no conflicts at all.
        """
        if self.row_conflicts == 0:
            return 0.0, True
        return self.subarray_conflicts / self.row_conflicts, False


def build_report(config_echo: dict, stats: RunStats, energy: EnergyModel) -> dict:
    ratio, degenerate = stats.subarray_conflict_ratio()
    report = {
        "config": config_echo,
        "channel": {
            "acts": stats.acts,
            "pres": stats.pres,
            "rds": stats.rds,
            "wrs": stats.wrs,
            "refs": stats.refs,
            "rfm_commands": stats.rfm_commands,
            "row_conflicts": stats.row_conflicts,
            "subarray_conflicts": stats.subarray_conflicts,
            "subarray_conflict_ratio": ratio,
            "subarray_conflict_ratio_degenerate": degenerate,
            "reads_done": stats.reads_done,
            "writes_done": stats.writes_done,
            "read_latency_mean": (
                stats.latency_sum / stats.reads_done if stats.reads_done else 0.0
            ),
            "read_latency_max": stats.latency_max,
            "elapsed_cycles": stats.elapsed_cycles,
            "throughput_per_cycle": stats.throughput(),
            "stall_cycles": list(stats.stall_cycles),
        },
        "recovery": {
            "alerts": stats.alerts,
            "anomalies": stats.anomalies,
            "refreshes_performed": stats.refreshes_performed,
            "refreshes_needed": stats.refreshes_needed,
            "banks_per_alert_mean": stats.mean_banks_per_alert,
            "banks_per_alert_max": stats.max_banks_per_alert,
            "masks": [list(m) for m in stats.masks],
            "max_counter": stats.max_counter,
        },
        "cores": stats.per_core,
        "ipc": stats.aggregate_ipc(),
        "energy": {
            "total": energy.total(stats),
            "constants": {
                "act_pre": energy.act_pre,
                "rd": energy.rd,
                "wr": energy.wr,
                "ref": energy.ref,
                "victim_refresh": energy.victim_refresh,
            },
        },
    }
    return report


def csv_row(
    report: dict,
    mechanism: str,
    n_rfm,
    threshold,
    workload: str,
    speedup=None,
) -> list[str]:
    def f(x):
        return f"{x:.6f}"

    return [
        mechanism,
        "" if n_rfm is None else str(n_rfm),
        "" if threshold is None else str(threshold),
        workload,
        f(report["ipc"] if report["cores"] else report["channel"]["throughput_per_cycle"]),
        "" if speedup is None else f(speedup),
        str(report["recovery"]["alerts"]),
        str(report["recovery"]["refreshes_performed"]),
        str(report["recovery"]["refreshes_needed"]),
        f(report["energy"]["total"]),
        str(report["recovery"]["max_counter"]),
    ]


def write_csv(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_json(path, report) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
