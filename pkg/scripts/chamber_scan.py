"""Scan the (omega, lambda) slice on both presets and write CSV files.

Usage: python3 scripts/chamber_scan.py [outdir]
"""

import sys
import time
from pathlib import Path

from coupled_duffing import chamberscan


def run(cfg, path):
    t0 = time.perf_counter()
    grid = chamberscan.scan(cfg)
    chamberscan.export_csv(grid, path)
    print(f"{path}: {grid.n_real.size} nodes in {time.perf_counter() - t0:.0f}s")
    print(f"  real counts {sorted(grid.real_counts())}")
    print(f"  chamber violations {chamberscan.chamber_violations(grid)}")
    print(f"  unpaired roots {int(grid.n_unpaired.sum())}")
    for key, counts in chamberscan.chamber_counts(grid).items():
        print(f"  (sign p, sign q, sign lambda) = {key}: {counts}")


if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
    out.mkdir(parents=True, exist_ok=True)
    run(chamberscan.SliceConfig(), out / "chambers_default.csv")
    run(chamberscan.WIDE_PRESET, out / "chambers_wide.csv")
