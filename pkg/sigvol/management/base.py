import json
import time
from pathlib import Path
from typing import Any

from blessings import Terminal
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError, CommandParser

from sigvol.exceptions import ConfigError, NumericalFailure, SigvolError
from sigvol.experiments.dataclasses import ExperimentManifest, RunResult
from sigvol.experiments.runners import run_experiment
from sigvol.experiments.schemas import SimDefaults, load_experiment
from sigvol.experiments.storages import FileStorage


t = Terminal()

CONFIG_ERROR = 2
NUMERICAL_FAILURE = 3


class SigvolCommand(BaseCommand):
    def bless_prints(self, label: str, msg: str) -> None:
        a = t.blue(f"{label}: ")
        z = t.green(msg)
        self.stdout.write(a + z)


def usage_error(error: Exception) -> CommandError:
    return CommandError(str(error), returncode=CONFIG_ERROR)


def read_json(path: Path) -> dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise CommandError(f"cannot read {path}: {e}", returncode=CONFIG_ERROR)
    except json.JSONDecodeError as e:
        raise CommandError(f"{path} is not valid JSON: {e}", returncode=CONFIG_ERROR)
    if not isinstance(data, dict):
        raise CommandError(f"{path} must hold a JSON object", returncode=CONFIG_ERROR)
    return data


def collect_seeds(config: dict[str, Any]) -> dict[str, int]:
    seeds = {}
    if isinstance(config.get("sim"), dict) and "seed" in config["sim"]:
        seeds["sim"] = int(config["sim"]["seed"])
    sigma = config.get("model", {}).get("sigma", {})
    if isinstance(sigma, dict) and isinstance(sigma.get("random"), dict):
        seeds["sigma"] = int(sigma["random"].get("seed", 0))
    return seeds


def execute(
    command: str, config: dict[str, Any], workers: int
) -> tuple[RunResult, dict[str, Any], float]:
    """
    Validate and run one experiment, mapping failures to exit codes. Returns
    the result, the configuration with the environment defaults filled in,
    and the wall-clock time.
    """
    defaults = SimDefaults(
        workers=workers,
        x_cap=settings.SIGVOL_X_CAP,
        kappa=settings.SIGVOL_SUBSTEP_KAPPA,
        chunk_size=settings.SIGVOL_CHUNK_SIZE,
        confidence=settings.SIGVOL_CONFIDENCE,
    )
    config = defaults.fill(config)
    try:
        experiment = load_experiment(command, config, defaults)
    except ConfigError as e:
        raise CommandError(
            "invalid configuration:\n  " + "\n  ".join(e.messages),
            returncode=CONFIG_ERROR,
        )
    started = time.perf_counter()
    try:
        result = run_experiment(command, experiment)
    except NumericalFailure as e:
        raise CommandError(f"numerical failure: {e}", returncode=NUMERICAL_FAILURE)
    except SigvolError as e:
        raise usage_error(e)
    return result, config, time.perf_counter() - started


class ExperimentCommand(SigvolCommand):
    """
    Runs the experiment described by a JSON configuration file and writes
    its result files plus a manifest to ``--out``.
    """

    experiment: str

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("config", type=Path, help="experiment configuration (JSON)")
        parser.add_argument("--seed", type=int, help="override the simulation seed")
        parser.add_argument(
            "--workers",
            type=int,
            default=settings.SIGVOL_WORKERS,
            help="worker processes; results do not depend on it",
        )
        parser.add_argument("--out", type=Path, help="output directory")

    def handle(self, *args: Any, **options: Any) -> None:
        config = read_json(options["config"])
        if options["seed"] is not None:
            if not isinstance(config.get("sim"), dict):
                raise CommandError(
                    "--seed needs a sim section in the configuration",
                    returncode=CONFIG_ERROR,
                )
            config["sim"] = {**config["sim"], "seed": options["seed"]}
        if options["workers"] < 1:
            raise CommandError("--workers must be at least 1", returncode=CONFIG_ERROR)

        result, config, elapsed = execute(
            self.experiment, config, options["workers"]
        )
        out = options["out"] or Path(settings.SIGVOL_OUTPUT_DIR) / self.experiment
        manifest = FileStorage(out).store_run(
            command=self.experiment,
            config=config,
            result=result,
            seeds=collect_seeds(config),
            wall_clock_seconds=elapsed,
        )
        self.report(manifest, result, out)

    def report(
        self, manifest: ExperimentManifest, result: RunResult, out: Path
    ) -> None:
        self.bless_prints(self.experiment, result.summary)
        for name in manifest.digests:
            self.bless_prints("wrote", str(out / name))
