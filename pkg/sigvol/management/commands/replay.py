from pathlib import Path
from typing import Any

from django.conf import settings
from django.core.management.base import CommandError, CommandParser

from sigvol.experiments.storages import FileStorage, digest, read_manifest
from sigvol.management.base import (
    CONFIG_ERROR,
    SigvolCommand,
    collect_seeds,
    execute,
)

DIGEST_MISMATCH = 1


class Command(SigvolCommand):
    help = "Re-runs an experiment from its manifest and compares result digests."

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument(
            "manifest", type=Path, help="manifest.json or its directory"
        )
        parser.add_argument("--workers", type=int, default=settings.SIGVOL_WORKERS)
        parser.add_argument("--out", type=Path, help="also store the replayed files")

    def handle(self, *args: Any, **options: Any) -> None:
        try:
            manifest = read_manifest(options["manifest"])
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise CommandError(
                f"cannot read manifest {options['manifest']}: {e}",
                returncode=CONFIG_ERROR,
            )
        result, config, elapsed = execute(
            manifest.command, manifest.config, options["workers"]
        )
        if options["out"] is not None:
            FileStorage(options["out"]).store_run(
                command=manifest.command,
                config=config,
                result=result,
                seeds=collect_seeds(config),
                wall_clock_seconds=elapsed,
            )

        mismatched = []
        for name in sorted(set(manifest.digests) | set(result.files)):
            replayed = digest(result.files[name]) if name in result.files else None
            same = replayed == manifest.digests.get(name)
            self.bless_prints(name, "identical" if same else "DIFFERS")
            if not same:
                mismatched.append(name)
        if mismatched:
            raise CommandError(
                f"replay of {manifest.command} differs in {', '.join(mismatched)}",
                returncode=DIGEST_MISMATCH,
            )
