"""Blind iterative beam alignment for reciprocal (TDD) MIMO links.

Least-squares (batch and sequential), summed power, least-squares primed
summed power, the simple power baseline and a pilot MMSE benchmark, plus
a Monte Carlo harness and CLI.
"""

from .aligners import (
    BatchLS,
    Lisp,
    PilotMmse,
    SimplePower,
    SlsOptimal,
    SlsSuboptimal,
    SummedPower,
    all_kinds,
    make_aligner,
)
from .channel import IID, ChannelSpec, DiagonalReal, SparseMmWave, sample_channel
from .harness import SimConfig, run_monte_carlo, run_single
from .metrics import beam_angle, cost_report, effective_gain
from .pingpong import Link, LinkParams

__all__ = [
    "BatchLS",
    "ChannelSpec",
    "DiagonalReal",
    "IID",
    "Link",
    "LinkParams",
    "Lisp",
    "PilotMmse",
    "SimConfig",
    "SimplePower",
    "SlsOptimal",
    "SlsSuboptimal",
    "SparseMmWave",
    "SummedPower",
    "all_kinds",
    "beam_angle",
    "cost_report",
    "effective_gain",
    "make_aligner",
    "run_monte_carlo",
    "run_single",
    "sample_channel",
]
