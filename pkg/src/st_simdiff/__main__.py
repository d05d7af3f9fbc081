"""Module entrypoint so `python -m st_simdiff` mirrors the `st-simdiff` script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
