#!/usr/bin/env python3
"""Normalized gain at k_max=100 versus a common link SNR on 4x32 i.i.d. channels."""

from _common import invoke, parse

if __name__ == "__main__":
    args = parse(__doc__, runs=10_000)
    snrs = ",".join(str(s) for s in range(-20, 31, 5))
    invoke("sweep-snr", "snr_iid", args, f"--snr-list={snrs}")
