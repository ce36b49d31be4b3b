from typing import Any

from django.core.management.base import CommandParser

from sigvol.algebra import Word
from sigvol.exceptions import AlgebraError
from sigvol.lyndon import (
    CLASSICAL_ORDER,
    DESCENDING_ORDER,
    avoid_letter_decompose,
    radford_decompose,
)
from sigvol.management.base import SigvolCommand, usage_error

ORDERS = {"descending": DESCENDING_ORDER, "classical": CLASSICAL_ORDER}


class Command(SigvolCommand):
    help = "Writes a word as a shuffle polynomial in Lyndon words."

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("word")
        parser.add_argument(
            "--avoid-letter",
            type=int,
            dest="avoid_letter",
            help="no factor other than this letter itself may end with it",
        )
        parser.add_argument(
            "--convention", choices=sorted(ORDERS), default="descending"
        )
        parser.add_argument("--dim", type=int, help="alphabet size")

    def handle(self, *args: Any, **options: Any) -> None:
        order = ORDERS[options["convention"]]
        try:
            word = Word.parse(options["word"], options["dim"])
            if options["avoid_letter"] is None:
                result = radford_decompose(word, order, options["dim"])
            else:
                result = avoid_letter_decompose(
                    word, options["avoid_letter"], order, options["dim"]
                )
        except AlgebraError as e:
            raise usage_error(e)
        self.stdout.write(result.render())
