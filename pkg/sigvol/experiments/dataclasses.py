"""Experiment descriptions, as loaded from configuration files."""

from typing import Any

import attrs

from sigvol.engine.dataclasses import ModelParams, SimConfig


@attrs.frozen
class SimulateExperiment:
    model: ModelParams
    sim: SimConfig
    dump_samples: bool = False
    confidence: float = 0.95


@attrs.frozen
class SmileExperiment:
    model: ModelParams
    sim: SimConfig
    strikes: tuple[float, ...]
    confidence: float = 0.95


@attrs.frozen
class ExplodeExperiment:
    model: ModelParams
    sim: SimConfig
    confidence: float = 0.95


@attrs.frozen
class MomentsExperiment:
    model: ModelParams
    sim: SimConfig
    m: float
    confidence: float = 0.95


@attrs.frozen
class CriticalExperiment:
    alpha: float
    beta: float
    m: float
    T: float
    lambda_grid: tuple[float, ...]
    psi: str = "sine"
    rho: float | None = None
    sim: SimConfig | None = None
    confidence: float = 0.95


@attrs.frozen
class WingsExperiment:
    model: ModelParams
    sim: SimConfig
    strikes: tuple[float, ...]
    fit_range: tuple[float, float]
    confidence: float = 0.95


Experiment = (
    SimulateExperiment
    | SmileExperiment
    | ExplodeExperiment
    | MomentsExperiment
    | CriticalExperiment
    | WingsExperiment
)


@attrs.frozen
class RunResult:
    """Result files by name, in the order they are written, and a summary."""

    files: dict[str, bytes]
    summary: str


@attrs.frozen
class ExperimentManifest:
    command: str
    config: dict[str, Any]
    seeds: dict[str, int]
    version: str
    wall_clock_seconds: float
    digests: dict[str, str]

    def to_json(self) -> dict[str, Any]:
        return attrs.asdict(self)

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ExperimentManifest":
        return cls(
            command=str(data["command"]),
            config=dict(data["config"]),
            seeds={str(k): int(v) for k, v in data.get("seeds", {}).items()},
            version=str(data.get("version", "")),
            wall_clock_seconds=float(data.get("wall_clock_seconds", 0.0)),
            digests={str(k): str(v) for k, v in data["digests"].items()},
        )
