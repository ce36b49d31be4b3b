import json
from typing import Any

from django.core.management.base import CommandParser

from sigvol.exceptions import SignatureError
from sigvol.management.base import SigvolCommand, usage_error
from sigvol.signature import expected_sig_time_bm


class Command(SigvolCommand):
    help = "Prints the expected signature of time and Brownian motion."

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("T", type=float)
        parser.add_argument("--bm-dim", type=int, dest="bm_dim", default=1)
        parser.add_argument("--level", type=int, default=3)

    def handle(self, *args: Any, **options: Any) -> None:
        try:
            signature = expected_sig_time_bm(
                options["T"], options["bm_dim"], options["level"]
            )
        except SignatureError as e:
            raise usage_error(e)
        data = {"alphabet_dim": signature.alphabet_dim, **signature.to_json()}
        self.stdout.write(json.dumps(data, indent=2))
