#!/usr/bin/env python3
"""Headless dyadic demo: a scripted sinusoid leader against a PD-follower
virtual player, with the full metric report and trial files."""

import argparse
import tempfile
from pathlib import Path

from synclab.harness import dyad_leader_vp_follower
from synclab.metrics import format_report, summary_lines


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--duration", type=float, default=30.0)
    parser.add_argument("--amplitude", type=float, default=1.0, help="leader amplitude dm")
    parser.add_argument("--freq", type=float, default=0.25, help="leader frequency Hz")
    parser.add_argument("--out", type=Path, default=None, help="directory for trial files")
    args = parser.parse_args()

    out = args.out or Path(tempfile.mkdtemp(prefix="dyad_demo_"))
    result = dyad_leader_vp_follower(seed=args.seed, duration_s=args.duration,
                                     amplitude_dm=args.amplitude, freq_hz=args.freq)
    files = result.record.save(out)
    print(format_report(result.report))
    print()
    for line in summary_lines(result.report):
        print(line)
    print()
    for path in files:
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
