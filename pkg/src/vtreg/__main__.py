"""Allow `python -m vtreg` as an alias for the vtreg console script."""
import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
