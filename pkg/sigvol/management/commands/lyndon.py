from typing import Any

from django.core.management.base import CommandParser

from sigvol.algebra import Word
from sigvol.exceptions import AlgebraError
from sigvol.lyndon import lyndon_factorization, lyndon_words, witt_count
from sigvol.management.base import SigvolCommand, usage_error
from sigvol.management.commands.radford import ORDERS


class Command(SigvolCommand):
    help = "Lists Lyndon words, or factorizes a word into Lyndon words."

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("dim", type=int, help="alphabet size")
        parser.add_argument("max_len", type=int, nargs="?", default=3)
        parser.add_argument("--factorize", metavar="WORD")
        parser.add_argument(
            "--convention", choices=sorted(ORDERS), default="descending"
        )

    def handle(self, *args: Any, **options: Any) -> None:
        order = ORDERS[options["convention"]]
        dim = options["dim"]
        try:
            if dim < 1:
                raise AlgebraError("the alphabet needs at least one letter")
            if options["factorize"] is not None:
                word = Word.parse(options["factorize"], dim)
                factors = lyndon_factorization(word, order)
                self.stdout.write(" ".join(f.render(dim) for f in factors))
                return
            words = lyndon_words(dim, options["max_len"], order)
        except AlgebraError as e:
            raise usage_error(e)
        for n in range(1, options["max_len"] + 1):
            of_length = [w.render(dim) for w in words if len(w) == n]
            self.bless_prints(f"{n} ({witt_count(dim, n)})", " ".join(of_length))
