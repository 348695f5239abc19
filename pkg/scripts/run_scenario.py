#!/usr/bin/env python3
"""Run a scenario file (trial config plus scripted-player specs) headlessly
and print the coordination report. See scenarios/ for examples."""

import argparse
import tempfile
from pathlib import Path

from synclab.harness import run_scenario
from synclab.metrics import format_report, summary_lines
from synclab.session import SignatureStore


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("scenario", type=Path, help="scenario file")
    parser.add_argument("--out", type=Path, default=None, help="trial-file directory")
    parser.add_argument("--data-root", type=Path, default=None,
                        help="data root holding a signature store, if the scenario needs one")
    parser.add_argument("--trial", type=int, default=1)
    args = parser.parse_args()

    store = SignatureStore(args.data_root / "signatures") if args.data_root else None
    out = args.out or Path(tempfile.mkdtemp(prefix="scenario_"))
    result = run_scenario(args.scenario.read_text(encoding="utf-8"),
                          data_dir=out, signature_store=store, trial_number=args.trial)
    if result.report is not None:
        print(format_report(result.report))
        print()
        for line in summary_lines(result.report):
            print(line)
    for path in result.files:
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
