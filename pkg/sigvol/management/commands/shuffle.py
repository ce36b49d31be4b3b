from typing import Any

from django.core.management.base import CommandParser

from sigvol.algebra import Word, shuffle_words
from sigvol.exceptions import AlgebraError
from sigvol.management.base import SigvolCommand, usage_error


class Command(SigvolCommand):
    help = "Prints the shuffle product of two words."

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("left", help='first word, e.g. 12 ("" or ø for empty)')
        parser.add_argument("right", help="second word")
        parser.add_argument("--dim", type=int, help="alphabet size")

    def handle(self, *args: Any, **options: Any) -> None:
        try:
            v = Word.parse(options["left"], options["dim"])
            w = Word.parse(options["right"], options["dim"])
            product = shuffle_words(v, w, options["dim"])
        except AlgebraError as e:
            raise usage_error(e)
        self.stdout.write(product.render())
