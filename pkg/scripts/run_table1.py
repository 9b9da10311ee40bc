"""Reproduce the growth table: one verified case per regime cell.

Usage::

    python scripts/run_table1.py --jobs 4 --out table1.csv
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from radial_biharmonic.cli import parse_config, report_to_csv, run_sweep

HERE = Path(__file__).resolve().parent


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, default=HERE / "table1.cfg")
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--out", type=Path, default=None, help="also write the full CSV here")
    args = p.parse_args(argv)

    reports = run_sweep(parse_config(args.config.read_text()), args.jobs)
    text = report_to_csv(reports)
    if args.out is not None:
        args.out.write_text(text)
    rows = list(csv.DictReader(io.StringIO(text)))
    print(f"{'n':>2} {'alpha':>8} {'regime':<18} {'law':<16} {'predicted':>12} {'estimated':>12} {'rel err':>9} {'band':>7}  ")
    for row in rows:
        print(
            f"{row['n']:>2} {float(row['alpha']):>8.4g} {row['regime']:<18} {row['law_form']:<16} "
            f"{float(row['predicted_constant'] or 'nan'):>12.6g} {float(row['estimated_constant'] or 'nan'):>12.6g} "
            f"{float(row['rel_error'] or 'nan'):>9.2e} {float(row['band'] or 'nan'):>7.0e}  {row['pass']}"
        )
    failed = sum(r["pass"] != "pass" for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} cells within their bands")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
