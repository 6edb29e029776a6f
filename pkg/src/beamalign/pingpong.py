"""Two-slot TDD observation model and the ideal feedback conduit.

Aligners only ever talk to a :class:`Link`; the channel matrix stays on
this side of the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DimensionError
from .numerics import cgauss

UNIT_TOL = 1e-9


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


@dataclass(frozen=True)
class LinkParams:
    rho_o: float
    rho_e: float
    noiseless: bool = False

    def __post_init__(self):
        for name in ("rho_o", "rho_e"):
            val = getattr(self, name)
            if not np.isfinite(val) or val < 0:
                raise ContractViolation(f"{name} must be finite and >= 0, got {val}")

    @classmethod
    def from_db(cls, snr_db_o: float, snr_db_e: float, noiseless: bool = False) -> LinkParams:
        return cls(db_to_linear(snr_db_o), db_to_linear(snr_db_e), noiseless)


def _check_unit(v: np.ndarray, name: str) -> None:
    nrm = np.linalg.norm(v, axis=-1)
    if np.any(np.abs(nrm - 1.0) > UNIT_TOL):
        raise ContractViolation(f"{name} must be unit norm (|norm-1| <= {UNIT_TOL}), got {np.max(np.abs(nrm - 1))}")


def ping(H: np.ndarray, f: np.ndarray, link: LinkParams, noise=None, rng=None) -> np.ndarray:
    """Slot 1 (downlink): ``sqrt(rho_o) H f + n_o`` received at node 2."""
    if H.shape[-1] != f.shape[-1]:
        raise DimensionError(f"beamformer length {f.shape[-1]} != M_t {H.shape[-1]}")
    _check_unit(f, "f")
    y = np.sqrt(link.rho_o) * np.einsum("...ij,...j->...i", H, f)
    if link.noiseless:
        return y
    if noise is None:
        noise = cgauss(y.shape, rng)
    return y + noise


def pong(H: np.ndarray, z: np.ndarray, link: LinkParams, noise=None, rng=None) -> np.ndarray:
    """Slot 2 (uplink): ``sqrt(rho_e) H^T conj(z) + n_e`` received at node 1."""
    if H.shape[-2] != z.shape[-1]:
        raise DimensionError(f"combiner length {z.shape[-1]} != M_r {H.shape[-2]}")
    _check_unit(z, "z")
    y = np.sqrt(link.rho_e) * np.einsum("...ji,...j->...i", H, np.conj(z))
    if link.noiseless:
        return y
    if noise is None:
        noise = cgauss(y.shape, rng)
    return y + noise


class FeedbackLog:
    """Counts bits carried by the (ideal) feedback link, per run."""

    def __init__(self, b_bits: int = 16):
        self.b_bits = int(b_bits)
        self.bits = 0
        self.messages = 0

    def record(self, n_elements: int) -> None:
        self.bits += n_elements * self.b_bits
        self.messages += 1

    @property
    def bytes(self) -> float:
        return self.bits / 8


def feedback(v: np.ndarray, log: FeedbackLog | None = None) -> np.ndarray:
    """Deliver ``v`` to the other node unchanged, logging ``len(v)`` complex elements."""
    if log is not None:
        log.record(v.shape[-1])
    return np.array(v, copy=True)


class Link:
    """Blind channel access for one run or a stack of runs.

    ``noise_o``/``noise_e`` hold the per-round noise with shape
    ``(..., rounds, M_r)`` / ``(..., rounds, M_t)``: the i-th ping uses row
    i of ``noise_o`` whatever the aligner does in between, so different
    aligners fed the same arrays see the same noise realization.
    """

    def __init__(self, H, params: LinkParams, noise_o=None, noise_e=None, b_bits: int = 16,
                 pilot_noise=None):
        self._H = np.asarray(H, dtype=complex)
        self.params = params
        self._noise_o = noise_o
        self._noise_e = noise_e
        self._pilot_noise = pilot_noise
        self.log = FeedbackLog(b_bits)
        self.n_ping = 0
        self.n_pong = 0

    @classmethod
    def from_rng(cls, H, params: LinkParams, rng: np.random.Generator, rounds: int, b_bits: int = 16) -> Link:
        H = np.asarray(H, dtype=complex)
        batch = H.shape[:-2]
        m_r, m_t = H.shape[-2:]
        n_o = cgauss(batch + (rounds, m_r), rng)
        n_e = cgauss(batch + (rounds, m_t), rng)
        pilot = (cgauss(batch + (m_r, m_t), rng), cgauss(batch + (m_t, m_r), rng))
        return cls(H, params, n_o, n_e, b_bits, pilot)

    @property
    def m_r(self) -> int:
        return self._H.shape[-2]

    @property
    def m_t(self) -> int:
        return self._H.shape[-1]

    @property
    def batch(self) -> tuple[int, ...]:
        return self._H.shape[:-2]

    @staticmethod
    def _row(noise, i):
        if noise is None:
            return None
        if i >= noise.shape[-2]:
            raise DimensionError(f"noise exhausted after {noise.shape[-2]} rounds")
        return noise[..., i, :]

    def ping(self, f: np.ndarray) -> np.ndarray:
        y = ping(self._H, f, self.params, noise=self._row(self._noise_o, self.n_ping))
        self.n_ping += 1
        return y

    def pong(self, z: np.ndarray) -> np.ndarray:
        y = pong(self._H, z, self.params, noise=self._row(self._noise_e, self.n_pong))
        self.n_pong += 1
        return y

    def feedback(self, v: np.ndarray) -> np.ndarray:
        return feedback(v, self.log)

    def sound(self, P_o: np.ndarray, P_e: np.ndarray, a_o: float, a_e: float):
        """Block pilot sounding in both directions.

        Returns ``Y_o = sqrt(a_o) H P_o + N_o`` and ``Y_e = sqrt(a_e) H^T P_e + N_e``.
        """
        Y_o = np.sqrt(a_o) * (self._H @ P_o)
        Y_e = np.sqrt(a_e) * (np.swapaxes(self._H, -1, -2) @ P_e)
        if not self.params.noiseless:
            if self._pilot_noise is None:
                raise DimensionError("link has no pilot noise")
            Y_o = Y_o + self._pilot_noise[0]
            Y_e = Y_e + self._pilot_noise[1]
        return Y_o, Y_e
