#!/usr/bin/env python3
"""Gain and angle versus iteration on 4x32 i.i.d. channels at -10, 0 and +20 dB."""

from _common import invoke, parse

if __name__ == "__main__":
    args = parse(__doc__, runs=2000)
    for snr in (-10, 0, 20):
        invoke("run", f"iid_{snr:+d}dB".replace("+", "p").replace("-", "m"), args, "--snr-db", snr)
