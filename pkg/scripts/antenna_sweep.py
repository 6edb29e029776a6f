#!/usr/bin/env python3
"""Normalized gain at k=100 versus M_t in {6, 8, ..., 64} (M_r=4, -10 dB), both channel models."""

from _common import invoke, parse

if __name__ == "__main__":
    args = parse(__doc__, runs=10_000)
    mt = ",".join(str(m) for m in range(6, 66, 2))
    for model in ("iid", "sparse"):
        invoke("sweep-antennas", f"antennas_{model}", args, "--channel", model, "--snr-db", -10, "--mt-list", mt)
