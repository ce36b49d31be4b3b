#!/usr/bin/env python
"""Entry point for the sigvol commands, e.g. ``./manage.py smile config.json``."""
import os
import sys


def main() -> None:
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "core.settings")

    from django.core.management import execute_from_command_line

    execute_from_command_line(sys.argv)


if __name__ == "__main__":
    main()
