"""Channel matrix models and the reference optimal beam pair."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .numerics import cgauss, dominant_singular_pair


@dataclass(frozen=True)
class IID:
    """Rayleigh channel with i.i.d. CN(0, 1) entries."""


@dataclass(frozen=True)
class SparseMmWave:
    """Clustered ULA channel: ``clusters`` paths with CN(0,1) gains.

    Angles of departure/arrival are uniform over ``angular_spread_deg``
    centred on broadside; element spacing is half a wavelength, so the
    carrier frequency is metadata only.
    """

    clusters: int = 3
    angular_spread_deg: float = 120.0
    paths_per_cluster: int = 1
    carrier_ghz: float = 28.0


@dataclass(frozen=True)
class DiagonalReal:
    """Real diagonal channel ``diag(h)`` with a strictly dominant first mode."""

    h: tuple[float, ...] = (2.0, 1.0)


@dataclass(frozen=True)
class ChannelSpec:
    m_r: int = 4
    m_t: int = 32
    model: IID | SparseMmWave | DiagonalReal = field(default_factory=IID)

    def __post_init__(self):
        validate_spec(self)


def validate_spec(spec: ChannelSpec) -> None:
    if int(spec.m_r) < 1:
        raise ConfigError("m_r", f"must be a positive integer, got {spec.m_r}")
    if int(spec.m_t) < 1:
        raise ConfigError("m_t", f"must be a positive integer, got {spec.m_t}")
    model = spec.model
    if isinstance(model, SparseMmWave):
        if model.clusters < 1:
            raise ConfigError("clusters", "must be >= 1")
        if model.paths_per_cluster < 1:
            raise ConfigError("paths_per_cluster", "must be >= 1")
        if not 0 <= model.angular_spread_deg <= 360:
            raise ConfigError("angular_spread_deg", "must lie in [0, 360]")
    elif isinstance(model, DiagonalReal):
        h = tuple(float(x) for x in model.h)
        if not (spec.m_r == spec.m_t == len(h)):
            raise ConfigError("channel", f"diagonal channel needs m_r = m_t = len(h) = {len(h)}")
        if any(x <= 0 for x in h):
            raise ConfigError("channel", "diagonal entries must be positive")
        if any(a < b for a, b in zip(h, h[1:])):
            raise ConfigError("channel", "diagonal entries must be non-increasing")
        if len(h) > 1 and not h[0] > h[1]:
            raise ConfigError("channel", "need h1 > h2 for a unique dominant mode")
    elif not isinstance(model, IID):
        raise ConfigError("channel", f"unknown channel model {model!r}")


@dataclass(frozen=True)
class ChannelInstance:
    H: np.ndarray
    sigma1: float
    f_opt: np.ndarray
    z_opt: np.ndarray

    @property
    def gain_max(self) -> float:
        return self.sigma1**2


def steering_vector(m: int, angle_rad: float) -> np.ndarray:
    """Half-wavelength ULA response, unit norm."""
    i = np.arange(m)
    return np.exp(1j * np.pi * i * np.sin(angle_rad)) / np.sqrt(m)


def optimal_pair(H: np.ndarray):
    """``(f_opt, z_opt, gain_max)``: dominant right/left singular vectors of H."""
    sigma, u, v = dominant_singular_pair(H)
    return v, u, sigma**2


def sample_matrix(spec: ChannelSpec, rng: np.random.Generator) -> np.ndarray:
    m_r, m_t = spec.m_r, spec.m_t
    model = spec.model
    if isinstance(model, IID):
        return cgauss((m_r, m_t), rng)
    if isinstance(model, DiagonalReal):
        return np.diag(np.asarray(model.h, dtype=float)).astype(complex)
    n_paths = model.clusters * model.paths_per_cluster
    half = np.deg2rad(model.angular_spread_deg) / 2
    gains = cgauss((n_paths,), rng)
    aoa = rng.uniform(-half, half, n_paths)
    aod = rng.uniform(-half, half, n_paths)
    H = np.zeros((m_r, m_t), dtype=complex)
    for g, th, ph in zip(gains, aoa, aod):
        H += g * np.outer(steering_vector(m_r, th), np.conj(steering_vector(m_t, ph)))
    return np.sqrt(m_r * m_t / n_paths) * H


def reference_pair(spec: ChannelSpec, H: np.ndarray):
    """``(sigma1, z_opt, f_opt)`` for matrices drawn from ``spec``; stacks allowed.

    Diagonal models with a strictly dominant first entry have the exact
    pair ``(h_1, e_1, e_1)``; other models use power iteration.
    """
    if isinstance(spec.model, DiagonalReal):
        batch = H.shape[:-2]
        e1 = np.zeros(spec.m_r, dtype=complex)
        e1[0] = 1.0
        sigma = np.full(batch, float(spec.model.h[0])) if batch else float(spec.model.h[0])
        pair = np.broadcast_to(e1, batch + (spec.m_r,)).copy()
        return sigma, pair, pair.copy()
    return dominant_singular_pair(H)


def sample_channel(spec: ChannelSpec, rng: np.random.Generator) -> ChannelInstance:
    validate_spec(spec)
    H = sample_matrix(spec, rng)
    sigma, u, v = reference_pair(spec, H)
    return ChannelInstance(H=H, sigma1=sigma, f_opt=v, z_opt=u)
