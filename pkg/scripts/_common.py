"""Shared plumbing for the experiment scripts: each one is a list of CLI invocations."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from beamalign.cli import main  # noqa: E402


def parse(description: str, runs: int):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--runs", type=int, default=runs, help=f"Monte Carlo runs per point (default {runs})")
    p.add_argument("--out-dir", default="results", help="directory for CSV and plot scripts")
    p.add_argument("--seed", type=int, default=0)
    return p.parse_args()


def invoke(command: str, name: str, args, *flags) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, plot_path = out / f"{name}.csv", out / f"plot_{name}.py"
    argv = [command, "--runs", str(args.runs), "--seed", str(args.seed), *map(str, flags),
            "--out", str(csv_path), "--plot", str(plot_path)]
    print("beamalign", " ".join(argv), flush=True)
    rc = main(argv)
    if rc:
        raise SystemExit(rc)
