"""Figures of merit and feedback/complexity accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aligners import BatchLS, Lisp, PilotMmse, SimplePower, SlsOptimal, SlsSuboptimal, SummedPower
from .errors import DimensionError

ANGLE_TOL = 1e-9


@dataclass(frozen=True)
class IterationRecord:
    k: int
    norm_gain: float
    angle_rad: float

    @property
    def angle_sq(self) -> float:
        return self.angle_rad**2


@dataclass(frozen=True)
class CostReport:
    algorithm: str
    flops_order: str
    feedback_bits: int


def effective_gain(H, f, z):
    """``|z* H f|^2``; broadcasts over leading batch axes."""
    if H.shape[-1] != f.shape[-1] or H.shape[-2] != z.shape[-1]:
        raise DimensionError(f"shapes H{H.shape}, f{f.shape}, z{z.shape} do not match")
    return np.abs(np.einsum("...i,...ij,...j->...", np.conj(z), H, f)) ** 2


def beam_angle(f_opt, f):
    """Chordal angle ``arccos |f_opt* f|`` in ``[0, pi/2]``.

    Evaluated as ``atan2(s, |c|)`` with ``c = f_opt* f`` and ``s`` the mean
    of the two perpendicular residuals, which equals the arccos form for
    unit vectors but keeps full precision for small angles. Averaging both
    residuals keeps the result exactly symmetric in its arguments.
    """
    if f_opt.shape[-1] != f.shape[-1]:
        raise DimensionError("beam lengths differ")
    c = np.einsum("...i,...i->...", np.conj(f_opt), f)
    if np.any(np.abs(c) > 1 + ANGLE_TOL):
        raise ArithmeticError(f"|<f_opt, f>| = {np.max(np.abs(c))} exceeds 1; inputs not unit norm")
    p1 = np.linalg.norm(f - c[..., None] * f_opt, axis=-1)
    p2 = np.linalg.norm(f_opt - np.conj(c)[..., None] * f, axis=-1)
    return np.arctan2(0.5 * (p1 + p2), np.abs(c))


def cost_report(kind, k_max: int, m_r: int, m_t: int, b_bits: int = 16, k_switch: int | None = None) -> CostReport:
    """Per-run compute order and exact feedback bits over ``k_max`` rounds."""
    per_round = b_bits * (m_r + m_t)
    if isinstance(kind, (SlsOptimal, SlsSuboptimal, BatchLS)):
        return CostReport(kind.name, f"{k_max}*O(M^3)", k_max * per_round)
    if isinstance(kind, Lisp):
        ks = k_switch if k_switch is not None else (kind.k_switch or max(m_r, m_t))
        ks = min(ks, k_max)
        return CostReport(kind.name, f"{ks}*O(M^3) + {k_max - ks}*O(M)", ks * per_round)
    if isinstance(kind, (SummedPower, SimplePower)):
        return CostReport(kind.name, f"{k_max}*O(M)", 0)
    if isinstance(kind, PilotMmse):
        return CostReport(kind.name, "O(M^3)", 0)
    raise TypeError(f"unknown kind {kind!r}")
