"""Allow `python -m hjvisc` as an alias for the console script."""

from .cli import entry

entry()
