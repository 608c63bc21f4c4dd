"""Experiment configuration: JSON schema, validation, defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .geometry import DramGeometry
from .recovery import (
    MECH_BASELINE,
    MECH_PRAC_OPP,
    MECH_PRAC_PRO,
    MECH_PRACTICAL,
    MECHANISMS,
    POLICY_OPPORTUNISTIC,
    POLICY_PROHIBITIVE,
    ConfigError,
    RecoveryConfig,
)
from .telemetry import DEFAULT_ENERGY, EnergyModel
from .timing import PRESETS, TimingSet

_GEOMETRY_FIELDS = (
    "channels",
    "ranks_per_channel",
    "bankgroups_per_rank",
    "banks_per_group",
    "rows_per_bank",
    "columns_per_row",
    "subarrays_per_bank",
    "cacheline_bytes",
)

_FORCED_POLICY = {
    MECH_PRAC_OPP: POLICY_OPPORTUNISTIC,
    MECH_PRAC_PRO: POLICY_PROHIBITIVE,
}


@dataclass
class CoreConfig:
    gen: dict | None = None
    trace: str | None = None
    window: int | None = None
    inst_target: int | None = None
    llc: dict | None = None

    def validate(self, name: str) -> None:
        if (self.gen is None) == (self.trace is None):
            raise ConfigError(f"{name}: exactly one of 'gen' or 'trace' required")
        if self.window is not None and self.window < 1:
            raise ConfigError(f"{name}: window must be >= 1")


@dataclass
class ExperimentConfig:
    mechanism: str
    workload: list[CoreConfig]
    max_cycles: int
    seed: int = 0
    n_rfm: int | None = None
    threshold: int | None = None
    policy: str | None = None
    blast_radius: int = 1
    geometry: DramGeometry = field(default_factory=DramGeometry)
    mop_width: int = 4
    timing_preset: str | None = None
    timing_overrides: dict = field(default_factory=dict)
    counter_width: int = 16
    counter_reset_on_ref: bool = True
    energy: dict = field(default_factory=lambda: dict(DEFAULT_ENERGY))
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ConfigError(
                f"mechanism: unknown value {self.mechanism!r}, expected one of {MECHANISMS}"
            )
        if self.mechanism == MECH_BASELINE:
            if self.n_rfm is not None or self.threshold is not None:
                raise ConfigError("mechanism 'baseline' forbids n_rfm and threshold")
            if self.policy is not None:
                raise ConfigError("mechanism 'baseline' forbids policy")
        else:
            forced = _FORCED_POLICY.get(self.mechanism)
            if forced is not None:
                if self.policy is not None and self.policy != forced:
                    raise ConfigError(
                        f"mechanism {self.mechanism!r} implies policy {forced!r}"
                    )
                self.policy = forced
            elif self.policy is None:
                self.policy = POLICY_OPPORTUNISTIC
            if self.threshold is not None:
                if self.mechanism == MECH_PRACTICAL and self.threshold <= 6:
                    raise ConfigError("threshold: practical requires a value > 6")
                if self.threshold < 2:
                    raise ConfigError("threshold must be >= 2")
            if self.n_rfm is None:
                self.n_rfm = 1
        if self.max_cycles <= 0:
            raise ConfigError("max_cycles must be positive")
        if not self.workload:
            raise ConfigError("workload: at least one core required")
        for i, core in enumerate(self.workload):
            core.validate(f"workload.cores[{i}]")
        if self.counter_width < 4 or self.counter_width > 32:
            raise ConfigError("counter_width must be in [4, 32]")
        if self.timing_preset is not None and self.timing_preset not in PRESETS:
            raise ConfigError(f"timing_preset: unknown preset {self.timing_preset!r}")

    # -- derived pieces --------------------------------------------------------

    def timing(self) -> TimingSet:
        preset = self.timing_preset
        if preset is None:
            preset = "baseline" if self.mechanism == MECH_BASELINE else "prac"
        t = PRESETS[preset]
        if self.timing_overrides:
            t = t.with_overrides(**self.timing_overrides)
        return t

    def base_timing(self) -> TimingSet:
        return PRESETS["baseline"]

    def recovery_config(self) -> RecoveryConfig | None:
        if self.mechanism == MECH_BASELINE or self.threshold is None:
            return None
        return RecoveryConfig(
            mechanism=self.mechanism,
            n_rfm=self.n_rfm,
            threshold=self.threshold,
            policy=self.policy,
            blast_radius=self.blast_radius,
        )

    def energy_model(self) -> EnergyModel:
        return EnergyModel(**self.energy)

    def echo(self) -> dict:
        """Config as recorded in reports (reproducibility provenance)."""
        return {
            "mechanism": self.mechanism,
            "n_rfm": self.n_rfm,
            "threshold": self.threshold,
            "policy": self.policy,
            "blast_radius": self.blast_radius,
            "seed": self.seed,
            "max_cycles": self.max_cycles,
            "timing_preset": self.timing().name,
            "timing_overrides": dict(self.timing_overrides),
            "mop_width": self.mop_width,
            "counter_width": self.counter_width,
            "counter_reset_on_ref": self.counter_reset_on_ref,
            "geometry": {k: getattr(self.geometry, k) for k in _GEOMETRY_FIELDS},
            "workload": self.raw.get("workload", {}),
        }


def _geometry_from_dict(d: dict) -> DramGeometry:
    unknown = set(d) - set(_GEOMETRY_FIELDS)
    if unknown:
        raise ConfigError(f"geometry: unknown fields {sorted(unknown)}")
    try:
        return DramGeometry(**d)
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from None


def from_dict(d: dict) -> ExperimentConfig:
    if "mechanism" not in d:
        raise ConfigError("mechanism: required field missing")
    workload = d.get("workload")
    if not isinstance(workload, dict) or "cores" not in workload:
        raise ConfigError("workload: expected an object with a 'cores' list")
    cores = []
    for i, c in enumerate(workload["cores"]):
        known = {"gen", "trace", "window", "inst_target", "llc"}
        unknown = set(c) - known
        if unknown:
            raise ConfigError(f"workload.cores[{i}]: unknown fields {sorted(unknown)}")
        cores.append(CoreConfig(**c))
    run = d.get("run", {})
    if "max_cycles" not in run:
        raise ConfigError("run.max_cycles: required field missing")
    timing = d.get("timing", {})
    overrides = {k: v for k, v in timing.items() if k != "preset"}
    try:
        cfg = ExperimentConfig(
            mechanism=d["mechanism"],
            workload=cores,
            max_cycles=run["max_cycles"],
            seed=d.get("seed", 0),
            n_rfm=d.get("n_rfm"),
            threshold=d.get("threshold"),
            policy=d.get("policy"),
            blast_radius=d.get("blast_radius", 1),
            geometry=_geometry_from_dict(d.get("geometry", {})),
            mop_width=d.get("mop_width", 4),
            timing_preset=timing.get("preset"),
            timing_overrides=overrides,
            counter_width=d.get("counter_width", 16),
            counter_reset_on_ref=d.get("counter_reset_on_ref", True),
            energy=dict(DEFAULT_ENERGY, **d.get("energy", {})),
            raw=d,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return from_dict(data)
