"""Run the acceptance criteria and print one pass/fail line per criterion."""

import subprocess
import sys
from pathlib import Path

if __name__ == "__main__":
    root = Path(__file__).resolve().parents[1]
    sys.exit(subprocess.call([sys.executable, "-m", "pytest", "-q",
                              str(root / "tests" / "test_acceptance.py"), *sys.argv[1:]]))
