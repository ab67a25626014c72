"""Compare the single-oscillator solver with the total-degree oracle.

Usage: python3 scripts/oracle_check.py [--targets 100] [--seed 0]
"""

import sys

from coupled_duffing.cli import main

if __name__ == "__main__":
    sys.exit(main(["oracle", *sys.argv[1:]]))
