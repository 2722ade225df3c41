"""Run every config in configs/ through the CLI and print one status line per experiment.

    python3 scripts/run_all.py [--out lp-out] [--threads 4]

validate_vp_d2.json is expected to exit 2: the trapezoid family lacks the
second derivatives the L1 conditions ask for in two dimensions.
"""

import argparse
import json
from pathlib import Path
import sys
import time

from lpbmo.harness import cli

ROOT = Path(__file__).resolve().parent.parent
EXPECTED = {"validate_vp_d2": 2}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=ROOT / "lp-out")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    surprises = 0
    for path in sorted((ROOT / "configs").glob("*.json")):
        experiment = json.loads(path.read_text())["experiment"]
        t0 = time.perf_counter()
        code = cli.main(["run", experiment, "--config", str(path), "--out", str(args.out / path.stem),
                         "--threads", str(args.threads)])
        want = EXPECTED.get(path.stem, 0)
        surprises += code != want
        print(f"{path.stem:<22} {experiment:<18} exit={code} (expected {want}) "
              f"{time.perf_counter() - t0:7.1f}s", flush=True)
    return 1 if surprises else 0


if __name__ == "__main__":
    sys.exit(main())
