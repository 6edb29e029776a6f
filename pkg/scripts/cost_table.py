#!/usr/bin/env python3
"""Compute order and feedback bits per algorithm for the default 4x32, k_max=100 setup."""

from _common import main

if __name__ == "__main__":
    raise SystemExit(main(["report-cost", "--algos", "all"]))
