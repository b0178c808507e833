#!/usr/bin/env python3
"""Run every bundled figure config and collect the CSVs under out/.

Each sub-run is equivalent to `rydberg-doa sweep --config configs/<name>.json`.
"""
import sys
import time
from pathlib import Path

from rydberg_doa import cli

ROOT = Path(__file__).resolve().parent.parent
FIGURES = ["fig2", "fig3c", "fig4", "fig6", "fig7a", "fig7b"]


def main() -> int:
    out_root = ROOT / "out"
    for name in FIGURES:
        config = ROOT / "configs" / f"{name}.json"
        print(f"--- {name} ---")
        started = time.perf_counter()
        code = cli.main(["sweep", "--config", str(config),
                         "--out", str(out_root / name)])
        if code != 0:
            print(f"{name} failed with exit code {code}", file=sys.stderr)
            return code
        print(f"{name} done in {time.perf_counter() - started:.1f}s\n")
    print(f"all figure data written under {out_root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
