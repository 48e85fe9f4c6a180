"""Experiment configuration: defaults, CLI flags, and the config file.

Precedence is config file > command-line flags > built-in defaults: a
checked-in experiment document pins every parameter of a run even when
invoked through wrapper scripts with stray flags.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..families import CircuitSpec, enumerate_paper_grid
from ..qcore import spark_topology

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "bits_per_shot",
    "load_config_file",
]

DEFAULT_TARGET_BITS = 1_000_000

_FILE_KEYS = {
    "grid", "family", "gate", "qubits", "repetitions", "shots", "bits",
    "seed", "calib", "backend", "endpoint", "out", "workers", "noise",
}
_NOISE_KEYS = {"gate_angle_error", "depolarizing_p"}


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


def load_config_file(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a mapping")
    unknown = set(doc) - _FILE_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "noise" in doc:
        if not isinstance(doc["noise"], dict):
            raise ConfigError("noise must be a mapping")
        bad = set(doc["noise"]) - _NOISE_KEYS
        if bad:
            raise ConfigError(f"unknown noise keys: {sorted(bad)}")
    return doc


def bits_per_shot(spec: CircuitSpec) -> int:
    """Extracted stream bits contributed by one shot of ``spec``."""
    if spec.family == "C2":
        return len(spec.qubits)
    if spec.family == "C5":
        return spec.repetitions or 1
    return 1


def _parse_qubits(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(q) for q in value)
    try:
        return tuple(int(part) for part in str(value).split(",") if part != "")
    except ValueError as exc:
        raise ConfigError(f"cannot parse qubits {value!r}") from exc


def _resolve_grid(merged: dict) -> tuple[CircuitSpec, ...]:
    grid = merged.get("grid")
    single = {k: merged.get(k) for k in ("family", "gate", "qubits")}
    if grid is not None and any(v is not None for v in single.values()):
        raise ConfigError("give either a grid or a single spec, not both")
    if grid is not None:
        if grid == "paper-grid":
            return tuple(enumerate_paper_grid(spark_topology()))
        if not isinstance(grid, list):
            raise ConfigError("grid must be 'paper-grid' or a list of specs")
        try:
            return tuple(CircuitSpec.from_dict(d) for d in grid)
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigError(f"bad grid entry: {exc}") from exc
    if single["family"] is None:
        raise ConfigError("nothing to run: give --grid or --family/--gate/--qubits")
    if single["gate"] is None or single["qubits"] is None:
        raise ConfigError("a single spec needs --family, --gate and --qubits")
    try:
        return (CircuitSpec(
            family=str(single["family"]),
            gate=str(single["gate"]),
            qubits=_parse_qubits(single["qubits"]),
            repetitions=merged.get("repetitions"),
        ),)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class ExperimentConfig:
    """Fully resolved settings for one generation run."""

    grid: tuple[CircuitSpec, ...]
    seed: int = 1
    shots: int | None = None               # explicit per-spec count
    target_bits: int = DEFAULT_TARGET_BITS  # used when shots is None
    calibration: str | None = None          # file path; None = packaged default
    gate_angle_error: dict = field(default_factory=dict)
    depolarizing_p: float = 0.0
    backend: str = "local"
    endpoint: str | None = None
    out_dir: str = "runs"
    workers: int = 4

    def __post_init__(self) -> None:
        if not self.grid:
            raise ConfigError("empty grid")
        if self.backend not in ("local", "remote"):
            raise ConfigError(f"backend must be local or remote, got {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ConfigError("remote backend needs an endpoint")
        if self.shots is not None and self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.target_bits < 1:
            raise ConfigError("bits target must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0.0 <= self.depolarizing_p <= 1.0:
            raise ConfigError("depolarizing_p outside [0,1]")
        for gate, eps in self.gate_angle_error.items():
            if gate not in ("RX", "RY"):
                raise ConfigError(f"angle error applies to RX/RY, got {gate!r}")
            if not isinstance(eps, (int, float)):
                raise ConfigError("angle error must be numeric")
        # "ideal" suppresses readout error entirely; None means the packaged
        # default snapshot
        if (self.calibration is not None and self.calibration != "ideal"
                and not Path(self.calibration).is_file()):
            raise ConfigError(f"calibration file not found: {self.calibration}")

    def spec_shots(self, spec: CircuitSpec) -> int:
        """Shot count for ``spec``: explicit, or enough for the bits target."""
        if self.shots is not None:
            return self.shots
        per = bits_per_shot(spec)
        return -(-self.target_bits // per)

    @classmethod
    def resolve(cls, flags: dict, config_path: str | None = None) -> "ExperimentConfig":
        """Merge flag values under the config file and build the config.

        ``flags`` uses the file-key vocabulary; None values mean unset.
        """
        merged = {k: v for k, v in flags.items() if v is not None}
        if config_path is not None:
            for key, value in load_config_file(config_path).items():
                merged[key] = value
        noise = merged.get("noise") or {}
        if merged.get("shots") is not None and merged.get("bits") is not None:
            raise ConfigError("give shots or a bits target, not both")
        try:
            shots = None if merged.get("shots") is None else int(merged["shots"])
            bits = (DEFAULT_TARGET_BITS if merged.get("bits") is None
                    else int(merged["bits"]))
            seed = int(merged.get("seed", 1))
            workers = int(merged.get("workers", 4))
            depol = float(noise.get("depolarizing_p", 0.0))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad numeric value: {exc}") from exc
        return cls(
            grid=_resolve_grid(merged),
            seed=seed,
            shots=shots,
            target_bits=bits,
            calibration=merged.get("calib"),
            gate_angle_error=dict(noise.get("gate_angle_error") or {}),
            depolarizing_p=depol,
            backend=str(merged.get("backend", "local")),
            endpoint=merged.get("endpoint"),
            out_dir=str(merged.get("out", "runs")),
            workers=workers,
        )
