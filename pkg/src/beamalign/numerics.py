"""Dense complex linear algebra helpers.

Everything here accepts optional leading batch axes (``(..., m, n)``
matrices, ``(..., n)`` vectors) so the same code path serves a single run
and a stack of Monte Carlo runs.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateError, DimensionError, NonConvergenceError, RankDeficiencyError

GRAM_COND_LIMIT = 1e12
POWER_RQ_TOL = 1e-14
POWER_RESID_TOL = 1e-11
POWER_MAX_ITER = 100_000
_START_SEED = 20_190_601


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Deterministic generator for the sub-stream ``keys`` of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


def cgauss(shape, rng: np.random.Generator) -> np.ndarray:
    """CN(0, 1) samples: real and imaginary parts each have variance 1/2."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    if any(int(s) < 1 for s in shape):
        raise DimensionError(f"invalid dimension {shape}")
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(0.5)


def cgauss_vec(n: int, rng: np.random.Generator) -> np.ndarray:
    return cgauss((n,), rng)


def normalize(v: np.ndarray, what: str = "vector") -> np.ndarray:
    """Scale the last axis to unit l2 norm."""
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(nrm == 0) or not np.all(np.isfinite(nrm)):
        raise DegenerateError(f"cannot normalize zero or non-finite {what}")
    return v / nrm


def unit_random(n: int, rng: np.random.Generator, batch: tuple[int, ...] = ()) -> np.ndarray:
    """Uniformly distributed point on the complex unit sphere in C^n."""
    while True:
        v = cgauss(tuple(batch) + (n,), rng)
        nrm = np.linalg.norm(v, axis=-1, keepdims=True)
        if np.all(nrm > 0):
            return v / nrm


def herm(A: np.ndarray) -> np.ndarray:
    """Conjugate transpose of the last two axes."""
    return np.conj(np.swapaxes(A, -1, -2))


def gram_condition(G: np.ndarray) -> np.ndarray:
    """2-norm condition number of a Hermitian PSD matrix (``inf`` if singular)."""
    w = np.linalg.eigvalsh(G)
    lo, hi = w[..., 0], w[..., -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), np.inf)


def lstsq_min_norm(A: np.ndarray, B: np.ndarray, cond_limit: float = GRAM_COND_LIMIT) -> np.ndarray:
    """Minimum-norm least-squares solution ``X = pinv(A) @ B``.

    Tall (or square) ``A`` uses the normal equations with ``A* A``; wide
    ``A`` uses the row-space form ``A* (A A*)^-1 B``. Either Gram matrix must
    be well conditioned (``cond < cond_limit``), otherwise
    :class:`RankDeficiencyError` is raised.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.ndim < 2 or B.ndim < 2:
        raise DimensionError("lstsq_min_norm expects matrices")
    m, n = A.shape[-2:]
    if B.shape[-2] != m:
        raise DimensionError(f"row mismatch: A has {m} rows, B has {B.shape[-2]}")
    if not np.any(A):
        raise RankDeficiencyError("A is identically zero", dimension=min(m, n))
    AH = herm(A)
    tall = m >= n
    gram = AH @ A if tall else A @ AH
    cond = gram_condition(gram)
    if np.any(~np.isfinite(cond) | (cond > cond_limit)):
        side = "column" if tall else "row"
        raise RankDeficiencyError(
            f"Gram matrix ({side} side, {gram.shape[-1]}x{gram.shape[-1]}) condition "
            f"{np.max(cond):.3g} exceeds {cond_limit:.0e}",
            dimension=gram.shape[-1],
        )
    if tall:
        return np.linalg.solve(gram, AH @ B)
    return AH @ np.linalg.solve(gram, B)


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    """Phase factor rotating the first significant entry of v onto the positive real axis."""
    mag = np.abs(v)
    idx = np.argmax(mag > 1e-10 * np.max(mag, axis=-1, keepdims=True), axis=-1)
    lead = np.take_along_axis(v, idx[..., None], axis=-1)
    return np.conj(lead) / np.abs(lead)


def dominant_singular_pair(A: np.ndarray, max_iter: int = POWER_MAX_ITER):
    """Largest singular value and its singular vectors by power iteration.

    Iterates on the smaller of ``A*A`` / ``AA*`` from a fixed seeded start.
    Stops once the Rayleigh quotient moves by less than ``1e-14`` (relative)
    and the eigen-residual is below ``1e-11`` of the eigenvalue, which bounds
    ``||A* u - s v||`` by ``1e-11 s``.

    Returns ``(sigma1, u, v)`` with ``A v = sigma1 u``; singular vectors carry
    a canonical phase (first significant entry of ``v`` real and positive).
    Stacked inputs ``(..., m, n)`` are processed together.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim < 2:
        raise DimensionError("dominant_singular_pair expects a matrix")
    m, n = A.shape[-2:]
    batch = A.shape[:-2]
    norms = np.linalg.norm(A.reshape(batch + (-1,)), axis=-1)
    if np.any(norms == 0):
        raise DimensionError("dominant_singular_pair of a zero matrix")
    AH = herm(A)
    right = n <= m
    # scale out magnitude so the tolerances are relative
    scale = norms[..., None, None]
    G = (AH @ A if right else A @ AH) / scale**2
    d = G.shape[-1]
    start = unit_random(d, np.random.default_rng(_START_SEED))
    x = np.broadcast_to(start, batch + (d,)).copy()
    lam = np.einsum("...i,...ij,...j->...", np.conj(x), G, x).real
    done = np.zeros(batch, dtype=bool)
    resid = np.full(batch, np.inf)
    for _ in range(max_iter):
        y = np.einsum("...ij,...j->...i", G, x)
        lam_new = np.einsum("...i,...i->...", np.conj(x), y).real
        resid = np.linalg.norm(y - lam_new[..., None] * x, axis=-1)
        conv = (np.abs(lam_new - lam) <= POWER_RQ_TOL * lam_new) & (resid <= POWER_RESID_TOL * lam_new)
        done = done | conv
        if np.all(done):
            break
        nrm = np.linalg.norm(y, axis=-1, keepdims=True)
        upd = ~done
        x = np.where(upd[..., None], y / nrm, x)
        lam = np.where(upd, lam_new, lam)
    else:
        raise NonConvergenceError(
            f"power iteration hit {max_iter} iterations", residual=float(np.max(resid))
        )
    if right:
        v = x
        Av = np.einsum("...ij,...j->...i", A, v)
        sigma = np.linalg.norm(Av, axis=-1)
        u = Av / sigma[..., None]
    else:
        u = x
        Ahu = np.einsum("...ij,...j->...i", AH, u)
        sigma = np.linalg.norm(Ahu, axis=-1)
        v = Ahu / sigma[..., None]
    ph = _canonical_phase(v)
    v = v * ph
    u = u * ph
    if not batch:
        return float(sigma), u, v
    return sigma, u, v


def spectral_norm_sq(A: np.ndarray):
    sigma, _, _ = dominant_singular_pair(A)
    return sigma**2
