"""
Command-line entrypoint.

    python -m rcdsim.main run --n 5 --kappa 10 --rho-r 0.0125 --trials 200
"""

import sys

from rcdsim.cli.commands import parse_and_dispatch


def main() -> int:
    return parse_and_dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
