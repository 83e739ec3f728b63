"""Search the FX260-shaped rule grid for configurations with exactly 260 patterns.

Prints every hit and whether the shipped preset is among them.

    python3 scripts/calibrate_fx260.py
"""
from __future__ import annotations

import argparse
from dataclasses import replace

from istsp.patterns import FX260_RULES, calibration_grid, enumerate_rules


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--target", type=int, default=260)
    args = ap.parse_args()
    hits = calibration_grid(args.target)
    for r in hits:
        gaps = r.pair_gaps if r.gap_mode == "pairwise" else f"{r.gap_minutes} min"
        print(f"mode={r.gap_mode:12s} head={r.head_protect} tail={r.tail_protect} gaps={gaps}")
    print(f"{len(hits)} configurations give {args.target} patterns")
    shipped = replace(FX260_RULES, doc="")
    print(f"preset gives {len(enumerate_rules(FX260_RULES))} patterns; in grid: "
          f"{any(replace(h, doc='') == shipped for h in hits)}")


if __name__ == "__main__":
    main()
