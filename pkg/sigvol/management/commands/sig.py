import json
from pathlib import Path
from typing import Any

from django.core.management.base import CommandParser

from sigvol.exceptions import SignatureError
from sigvol.experiments.storages import encode_json
from sigvol.management.base import SigvolCommand, usage_error
from sigvol.signature import path_signature, read_path_csv


class Command(SigvolCommand):
    help = "Computes the truncated signature of a path stored as t,x1,...,xd CSV."

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("path", type=Path)
        parser.add_argument("--level", type=int, default=2)
        parser.add_argument(
            "--no-time",
            action="store_false",
            dest="time",
            help="leave out the time coordinate (letter 1 by default)",
        )
        parser.add_argument("--out", type=Path, help="write the JSON here")

    def handle(self, *args: Any, **options: Any) -> None:
        try:
            path = read_path_csv(options["path"])
            if options["time"]:
                path = path.time_augmented()
            signature = path_signature(path, options["level"])
        except (OSError, SignatureError) as e:
            raise usage_error(e)
        data = {"alphabet_dim": signature.alphabet_dim, **signature.to_json()}
        if options["out"] is None:
            self.stdout.write(json.dumps(data, indent=2))
            return
        options["out"].write_bytes(encode_json(data))
        self.bless_prints("wrote", str(options["out"]))
