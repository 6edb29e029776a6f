#!/usr/bin/env python3
"""LISP gain at k_max versus the switch point on 4x32 channels.

Two settings: 0 dB with k_max=100 and -10 dB with k_max=400, each on
i.i.d. and sparse channels.
"""

from _common import invoke, parse

if __name__ == "__main__":
    args = parse(__doc__, runs=10_000)
    points = "1,2,4,8,16,24,32,48,64,96"
    for model in ("iid", "sparse"):
        invoke("sweep-kswitch", f"kswitch_{model}_0dB", args, "--channel", model, "--snr-db", 0,
               "--kmax", 100, "--algos", "lisp", "--kswitch-list", points)
        invoke("sweep-kswitch", f"kswitch_{model}_m10dB", args, "--channel", model, "--snr-db", -10,
               "--kmax", 400, "--algos", "lisp", "--kswitch-list", points + ",128,200")
