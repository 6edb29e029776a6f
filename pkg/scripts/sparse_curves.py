#!/usr/bin/env python3
"""Gain and angle versus iteration on 4x32 sparse (3-cluster) channels at -10 dB."""

from _common import invoke, parse

if __name__ == "__main__":
    args = parse(__doc__, runs=2000)
    invoke("run", "sparse_m10dB", args, "--channel", "sparse", "--snr-db", -10)
