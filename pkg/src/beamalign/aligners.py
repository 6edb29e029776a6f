"""Beam-alignment state machines.

Every aligner runs one ping-pong *round* per :meth:`Aligner.step`: node 1
pings with its current beamformer, node 2 updates its combiner, node 2
pongs with the fresh combiner, node 1 updates its beamformer. All state
arrays may carry a leading batch axis (one entry per Monte Carlo run).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractViolation, DegenerateError, RankDeficiencyError
from .numerics import GRAM_COND_LIMIT, dominant_singular_pair, gram_condition, herm, lstsq_min_norm, normalize
from .pingpong import Link

DEFAULT_ALPHA = 1000.0
PINV_RCOND = 1e-10
SEED_MODES = ("history", "unit", "received", "zero")


# ---------------------------------------------------------------------------
# Algorithm descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BatchLS:
    name = "batch_ls"


@dataclass(frozen=True)
class SlsOptimal:
    name = "sls_optimal"


@dataclass(frozen=True)
class SlsSuboptimal:
    alpha_init: float = DEFAULT_ALPHA
    name = "sls_suboptimal"


@dataclass(frozen=True)
class SummedPower:
    name = "summed_power"


@dataclass(frozen=True)
class Lisp:
    """Least-squares primed summed power.

    ``k_switch=None`` resolves to ``max(M_r, M_t)``. ``seed_mode`` picks how
    the running sums are seeded at the switch: ``"history"`` (sum of every
    vector received so far, as if the sums had run from the start, so that
    ``k_switch=1`` is exactly summed power), ``"unit"`` (primed beam as is),
    ``"received"`` (primed beam scaled by the norm of the last received
    vector) or ``"zero"`` (empty sums).
    """

    k_switch: int | None = None
    alpha_init: float = DEFAULT_ALPHA
    seed_mode: str = "history"
    name = "lisp"

    def __post_init__(self):
        if self.k_switch is not None and self.k_switch < 1:
            raise ContractViolation("k_switch must be >= 1")
        if self.alpha_init <= 0:
            raise ContractViolation("alpha_init must be > 0")
        if self.seed_mode not in SEED_MODES:
            raise ContractViolation(f"unknown seed_mode {self.seed_mode!r}")


@dataclass(frozen=True)
class SimplePower:
    name = "simple_power"


@dataclass(frozen=True)
class PilotMmse:
    name = "pilot_mmse"


KIND_ORDER = (BatchLS, SlsOptimal, SlsSuboptimal, SummedPower, Lisp, SimplePower, PilotMmse)
ITERATIVE_KINDS = KIND_ORDER[:-1]


def all_kinds() -> list:
    return [cls() for cls in KIND_ORDER]


def kind_from_name(name: str):
    for cls in KIND_ORDER:
        if cls.name == name:
            return cls()
    raise KeyError(name)


def kind_label(kind) -> str:
    if isinstance(kind, Lisp) and kind.k_switch is not None:
        return f"lisp@{kind.k_switch}"
    return kind.name


def kind_rank(kind) -> int:
    return KIND_ORDER.index(type(kind))


# ---------------------------------------------------------------------------
# Least-squares machinery
# ---------------------------------------------------------------------------


def _inv_sqrt(rho: float) -> float:
    return 1.0 / np.sqrt(rho) if rho > 0 else 1.0


def _matvec(A, x):
    return np.einsum("...ij,...j->...i", A, x)


@dataclass
class LsState:
    """Both nodes' least-squares state.

    ``H_o`` is node 2's estimate of H; ``H_e_conjT`` is node 1's estimate of
    ``H*`` (stored conjugate-transposed). ``C_o``/``C_e`` are the inverse
    Gram matrices ``(F F*)^-1``/``(Z Z*)^-1`` (no ``1/rho`` factor), or the
    ``alpha I`` surrogate. Histories are column lists, newest last.
    """

    f_cur: np.ndarray
    z_cur: np.ndarray
    H_o: np.ndarray | None = None
    H_e_conjT: np.ndarray | None = None
    C_o: np.ndarray | None = None
    C_e: np.ndarray | None = None
    F_hist: list = field(default_factory=list)
    Z_hist: list = field(default_factory=list)
    Yo_hist: list = field(default_factory=list)
    Ye_hist: list = field(default_factory=list)
    last_gain_o: np.ndarray | None = None
    last_gain_e: np.ndarray | None = None


def rls_update(H_est, C, x, target):
    """Rank-one recursive LS update of ``H_est`` towards ``H_est x = target``.

    Returns ``(H_new, C_new, K)`` with ``K = x* C / (1 + x* C x)``.
    """
    Cx = _matvec(C, x)
    denom = 1.0 + np.einsum("...i,...i->...", np.conj(x), Cx).real
    if np.any(denom <= 0) or not np.all(np.isfinite(denom)):
        raise DegenerateError("RLS denominator 1 + x*Cx is not positive")
    K = np.conj(Cx) / denom[..., None]
    innov = target - _matvec(H_est, x)
    H_new = H_est + innov[..., :, None] * K[..., None, :]
    C_new = C - Cx[..., :, None] * K[..., None, :]
    C_new = 0.5 * (C_new + herm(C_new))
    return H_new, C_new, K


def batch_estimate(X_cols: np.ndarray, Y_cols: np.ndarray) -> np.ndarray:
    """Minimum-norm LS solution of ``Hhat X = Y`` (columns along the last axis).

    Noiseless beam histories live in a Krylov subspace of ``H* H`` and can
    be exactly rank deficient; the Gram-branch solver then refuses and the
    SVD pseudoinverse takes over.
    """
    try:
        return herm(lstsq_min_norm(herm(X_cols), herm(Y_cols)))
    except RankDeficiencyError:
        return Y_cols @ np.linalg.pinv(X_cols, rcond=PINV_RCOND)


def gram_inverse(X_cols: np.ndarray) -> np.ndarray:
    gram = X_cols @ herm(X_cols)
    cond = gram_condition(gram)
    if np.any(~np.isfinite(cond) | (cond > GRAM_COND_LIMIT)):
        raise RankDeficiencyError(f"history Gram condition {np.max(cond):.3g} too large", dimension=gram.shape[-1])
    C = np.linalg.inv(gram)
    return 0.5 * (C + herm(C))


def handover_update(H_est, C, switched, X_cols, T_cols, x, target):
    """One node's step of the batch-then-sequential estimator.

    Runs flagged in ``switched`` take the recursive update; the others get
    the batch estimate from the full history ``X_cols -> T_cols`` (which must
    already include ``x``, ``target``). A run is handed over as soon as its
    history Gram matrix is well conditioned, with ``C = (X X*)^-1``.
    Returns ``(H_est, C, switched)``.
    """
    H_new = batch_estimate(X_cols, T_cols)
    if np.any(switched):
        H_seq, C_seq, _ = rls_update(H_est, C, x, target)
        mask = switched[..., None, None]
        H_new = np.where(mask, H_seq, H_new)
        C = np.where(mask, C_seq, C)
    m, n = X_cols.shape[-2:]
    if n >= m:
        gram = X_cols @ herm(X_cols)
        ready = ~switched & (gram_condition(gram) <= GRAM_COND_LIMIT)
        if np.any(ready):
            C = np.array(C, copy=True)
            flat_c, flat_g = C.reshape(-1, m, m), gram.reshape(-1, m, m)
            idx = np.flatnonzero(ready)
            inv = np.linalg.inv(flat_g[idx])
            flat_c[idx] = 0.5 * (inv + herm(inv))
            switched = switched | ready
    return H_new, C, switched


def _stack(cols: list) -> np.ndarray:
    return np.stack(cols, axis=-1)


def node2_batch(state: LsState, rho_o: float) -> None:
    """Node 2 batch estimate from the whole ping history, then its combiner."""
    F = _stack(state.F_hist)
    Y = _stack(state.Yo_hist) * _inv_sqrt(rho_o)
    state.H_o = batch_estimate(F, Y)
    state.z_cur = normalize(_matvec(state.H_o, state.F_hist[-1]), "combiner")


def node1_batch(state: LsState, rho_e: float) -> None:
    Z = _stack(state.Z_hist)
    Y = np.conj(_stack(state.Ye_hist)) * _inv_sqrt(rho_e)
    state.H_e_conjT = batch_estimate(Z, Y)
    state.f_cur = normalize(_matvec(state.H_e_conjT, state.Z_hist[-1]), "beamformer")


def sls_node2_update(state: LsState, f_k, y_o_k, rho_o: float) -> LsState:
    """Sequential node-2 update with the newest (beamformer, observation) pair."""
    state.H_o, state.C_o, state.last_gain_o = rls_update(state.H_o, state.C_o, f_k, y_o_k * _inv_sqrt(rho_o))
    state.F_hist.append(f_k)
    state.Yo_hist.append(y_o_k)
    state.z_cur = normalize(_matvec(state.H_o, f_k), "combiner")
    return state


def sls_node1_update(state: LsState, z_prev, y_e_prev, rho_e: float) -> LsState:
    """Sequential node-1 update on the conjugate-transposed estimate."""
    target = np.conj(y_e_prev) * _inv_sqrt(rho_e)
    state.H_e_conjT, state.C_e, state.last_gain_e = rls_update(state.H_e_conjT, state.C_e, z_prev, target)
    state.Z_hist.append(z_prev)
    state.Ye_hist.append(y_e_prev)
    state.f_cur = normalize(_matvec(state.H_e_conjT, z_prev), "beamformer")
    return state


def sls_suboptimal_init(f0, y_o0, y_e0, rho_o: float, rho_e: float, alpha: float) -> LsState:
    """Rank-one start from the first ping/pong pair, covariances ``alpha I``.

    ``y_e0`` must be the pong observed with ``z0 = y_o0 / ||y_o0||``.
    """
    if alpha <= 0:
        raise ContractViolation("alpha must be > 0")
    z0 = normalize(y_o0, "first ping observation")
    H_o = (y_o0 * _inv_sqrt(rho_o))[..., :, None] * np.conj(f0)[..., None, :]
    H_e_conjT = (np.conj(y_e0) * _inv_sqrt(rho_e))[..., :, None] * np.conj(z0)[..., None, :]
    f1 = normalize(_matvec(H_e_conjT, z0), "first pong observation")
    m_t, m_r = f0.shape[-1], z0.shape[-1]
    batch = f0.shape[:-1]
    C_o = np.broadcast_to(alpha * np.eye(m_t, dtype=complex), batch + (m_t, m_t)).copy()
    C_e = np.broadcast_to(alpha * np.eye(m_r, dtype=complex), batch + (m_r, m_r)).copy()
    return LsState(f_cur=f1, z_cur=z0, H_o=H_o, H_e_conjT=H_e_conjT, C_o=C_o, C_e=C_e,
                   F_hist=[f0], Z_hist=[z0], Yo_hist=[y_o0], Ye_hist=[y_e0])


# ---------------------------------------------------------------------------
# Summed power machinery
# ---------------------------------------------------------------------------


@dataclass
class SummedState:
    s_e: np.ndarray
    s_o: np.ndarray
    f_cur: np.ndarray
    z_cur: np.ndarray


def summed_node2_step(state: SummedState, y_o) -> SummedState:
    state.s_o = state.s_o + y_o
    state.z_cur = normalize(state.s_o, "running sum s_o")
    return state


def summed_node1_step(state: SummedState, y_e) -> SummedState:
    state.s_e = state.s_e + np.conj(y_e)
    state.f_cur = normalize(state.s_e, "running sum s_e")
    return state


# ---------------------------------------------------------------------------
# Aligners
# ---------------------------------------------------------------------------


class Aligner:
    """One algorithm bound to a :class:`Link`.

    ``rho_o``/``rho_e`` are the SNRs the nodes *believe*; they default to
    the link's nominal values.
    """

    def __init__(self, kind, link: Link, f0, z0, rho_o=None, rho_e=None):
        self.kind = kind
        self.link = link
        self.rho_o = link.params.rho_o if rho_o is None else rho_o
        self.rho_e = link.params.rho_e if rho_e is None else rho_e
        self.k = 0
        self._f = np.array(f0, dtype=complex)
        self._z = np.array(z0, dtype=complex)

    @property
    def f(self) -> np.ndarray:
        return self._f

    @property
    def z(self) -> np.ndarray:
        return self._z

    def step(self) -> None:
        self.k += 1
        self._round()

    def _round(self) -> None:
        raise NotImplementedError


class SimplePowerAligner(Aligner):
    """Conjugate, normalize, retransmit; no memory."""

    def _round(self):
        y_o = self.link.ping(self._f)
        self._z = normalize(y_o, "ping observation")
        y_e = self.link.pong(self._z)
        self._f = normalize(np.conj(y_e), "pong observation")


class SummedPowerAligner(Aligner):
    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        zero_e = np.zeros_like(self._f)
        zero_o = np.zeros_like(self._z)
        self.state = SummedState(s_e=zero_e, s_o=zero_o, f_cur=self._f, z_cur=self._z)

    def _round(self):
        y_o = self.link.ping(self.state.f_cur)
        summed_node2_step(self.state, y_o)
        y_e = self.link.pong(self.state.z_cur)
        summed_node1_step(self.state, y_e)
        self._f, self._z = self.state.f_cur, self.state.z_cur


class SlsSuboptimalAligner(Aligner):
    """Rank-one start then sequential LS from the second round on."""

    def __init__(self, *args, alpha: float = DEFAULT_ALPHA, **kw):
        super().__init__(*args, **kw)
        self.alpha = alpha
        self.state: LsState | None = None
        self.last_y_o = None
        self.last_y_e = None

    def _round(self):
        link = self.link
        if self.state is None:
            f0 = link.feedback(self._f)
            y_o = link.ping(self._f)
            z0 = normalize(y_o, "ping observation")
            link.feedback(z0)  # node 1 needs z[0] for its rank-one estimate
            y_e = link.pong(z0)
            self.state = sls_suboptimal_init(f0, y_o, y_e, self.rho_o, self.rho_e, self.alpha)
        else:
            f = self.state.f_cur
            f_fwd = link.feedback(f)
            y_o = link.ping(f)
            sls_node2_update(self.state, f_fwd, y_o, self.rho_o)
            z = self.state.z_cur
            z_fb = link.feedback(z)
            y_e = link.pong(z)
            sls_node1_update(self.state, z_fb, y_e, self.rho_e)
        self.last_y_o, self.last_y_e = y_o, y_e
        self._f, self._z = self.state.f_cur, self.state.z_cur


class SlsOptimalAligner(Aligner):
    """Batch LS until a node's history Gram matrix is invertible, then sequential.

    With noisy observations node 2 hands over after ``M_t`` pings and node 1
    after ``M_r`` pongs; noiseless beam histories may never reach full rank,
    in which case the node simply stays on the batch estimate.
    ``always_batch=True`` gives the pure batch estimator.
    """

    def __init__(self, *args, always_batch: bool = False, **kw):
        super().__init__(*args, **kw)
        self.always_batch = always_batch
        self.state = LsState(f_cur=self._f, z_cur=self._z)
        batch = self._f.shape[:-1]
        m_t, m_r = self._f.shape[-1], self._z.shape[-1]
        self.state.C_o = np.zeros(batch + (m_t, m_t), dtype=complex)
        self.state.C_e = np.zeros(batch + (m_r, m_r), dtype=complex)
        self.switched_o = np.zeros(batch, dtype=bool)
        self.switched_e = np.zeros(batch, dtype=bool)

    def _node2(self, f, y_o):
        st = self.state
        if not self.always_batch and np.all(self.switched_o):
            sls_node2_update(st, f, y_o, self.rho_o)
            return
        st.F_hist.append(f)
        st.Yo_hist.append(y_o)
        F, T = _stack(st.F_hist), _stack(st.Yo_hist) * _inv_sqrt(self.rho_o)
        if self.always_batch:
            st.H_o = batch_estimate(F, T)
        else:
            st.H_o, st.C_o, self.switched_o = handover_update(
                st.H_o, st.C_o, self.switched_o, F, T, f, y_o * _inv_sqrt(self.rho_o))
        st.z_cur = normalize(_matvec(st.H_o, f), "combiner")

    def _node1(self, z, y_e):
        st = self.state
        if not self.always_batch and np.all(self.switched_e):
            sls_node1_update(st, z, y_e, self.rho_e)
            return
        st.Z_hist.append(z)
        st.Ye_hist.append(y_e)
        Z, T = _stack(st.Z_hist), np.conj(_stack(st.Ye_hist)) * _inv_sqrt(self.rho_e)
        if self.always_batch:
            st.H_e_conjT = batch_estimate(Z, T)
        else:
            st.H_e_conjT, st.C_e, self.switched_e = handover_update(
                st.H_e_conjT, st.C_e, self.switched_e, Z, T, z, np.conj(y_e) * _inv_sqrt(self.rho_e))
        st.f_cur = normalize(_matvec(st.H_e_conjT, z), "beamformer")

    def _round(self):
        link, st = self.link, self.state
        try:
            f = st.f_cur
            f_fwd = link.feedback(f)
            self._node2(f_fwd, link.ping(f))
            z = st.z_cur
            z_fb = link.feedback(z)
            self._node1(z_fb, link.pong(z))
        except RankDeficiencyError as exc:
            exc.iteration = self.k
            raise
        self._f, self._z = st.f_cur, st.z_cur


class LispAligner(Aligner):
    """Sequential LS for the first ``k_switch`` rounds, summed power after."""

    def __init__(self, *args, k_switch: int, alpha: float = DEFAULT_ALPHA, seed_mode: str = "history", **kw):
        super().__init__(*args, **kw)
        self.k_switch = k_switch
        self.seed_mode = seed_mode
        self.sls = SlsSuboptimalAligner(self.kind, self.link, self._f, self._z,
                                        rho_o=self.rho_o, rho_e=self.rho_e, alpha=alpha)
        self.summed: SummedState | None = None

    def _seed(self):
        f, z = self.sls.f, self.sls.z
        if self.seed_mode == "zero":
            s_e, s_o = np.zeros_like(f), np.zeros_like(z)
        elif self.seed_mode == "history":
            s_e = np.conj(sum(self.sls.state.Ye_hist))
            s_o = sum(self.sls.state.Yo_hist)
        elif self.seed_mode == "unit":
            s_e, s_o = f.copy(), z.copy()
        else:
            s_e = np.linalg.norm(self.sls.last_y_e, axis=-1, keepdims=True) * f
            s_o = np.linalg.norm(self.sls.last_y_o, axis=-1, keepdims=True) * z
        return SummedState(s_e=s_e, s_o=s_o, f_cur=f, z_cur=z)

    def _round(self):
        if self.k <= self.k_switch:
            self.sls.step()
            self._f, self._z = self.sls.f, self.sls.z
            return
        if self.summed is None:
            self.summed = self._seed()
        st = self.summed
        y_o = self.link.ping(st.f_cur)
        summed_node2_step(st, y_o)
        y_e = self.link.pong(st.z_cur)
        summed_node1_step(st, y_e)
        self._f, self._z = st.f_cur, st.z_cur


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix."""
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)


def pilot_mmse_run(link: Link, k_max: int, f_init=None, z_init=None):
    """Pilot-based MMSE estimate at each node, beams from its dominant singular pair.

    Each direction spends the energy of ``k_max`` training slots on a
    scaled unitary DFT pilot block. Returns ``(f_hat, z_hat, H_o, H_e)``;
    ``H_e`` estimates ``H^T``. With zero training energy a node keeps its
    initial beam (its estimate is identically zero).
    """
    m_r, m_t = link.m_r, link.m_t
    if k_max < max(m_r, m_t):
        raise ContractViolation(f"pilot scheme needs k_max >= max(M_r, M_t) = {max(m_r, m_t)}")
    P_o, P_e = dft_matrix(m_t), dft_matrix(m_r)
    a_o = link.params.rho_o * k_max / m_t
    a_e = link.params.rho_e * k_max / m_r
    Y_o, Y_e = link.sound(P_o, P_e, a_o, a_e)
    H_o = np.sqrt(a_o) / (1 + a_o) * (Y_o @ herm(P_o))
    H_e = np.sqrt(a_e) / (1 + a_e) * (Y_e @ herm(P_e))
    if a_o > 0:
        _, z_hat, _ = dominant_singular_pair(H_o)
    else:
        z_hat = z_init
    if a_e > 0:
        # H_e ~ H^T = conj(V) S U^T: its left singular vector is conj(f_opt)
        _, u_e, _ = dominant_singular_pair(H_e)
        f_hat = np.conj(u_e)
    else:
        f_hat = f_init
    return f_hat, z_hat, H_o, H_e


class PilotMmseAligner(Aligner):
    """Non-iterative benchmark: beams stay at their initial values until the
    training block of ``k_max`` slots completes."""

    def __init__(self, *args, k_max: int, **kw):
        super().__init__(*args, **kw)
        self.k_max = k_max
        if k_max < max(self.link.m_r, self.link.m_t):
            raise ContractViolation(f"pilot scheme needs k_max >= max(M_r, M_t)")

    def _round(self):
        if self.k == self.k_max:
            f, z, _, _ = pilot_mmse_run(self.link, self.k_max, self._f, self._z)
            self._f, self._z = np.array(f), np.array(z)


def make_aligner(kind, link: Link, f0, z0, k_max: int | None = None, rho_o=None, rho_e=None) -> Aligner:
    kw = dict(rho_o=rho_o, rho_e=rho_e)
    if isinstance(kind, BatchLS):
        return SlsOptimalAligner(kind, link, f0, z0, always_batch=True, **kw)
    if isinstance(kind, SlsOptimal):
        return SlsOptimalAligner(kind, link, f0, z0, **kw)
    if isinstance(kind, SlsSuboptimal):
        return SlsSuboptimalAligner(kind, link, f0, z0, alpha=kind.alpha_init, **kw)
    if isinstance(kind, SummedPower):
        return SummedPowerAligner(kind, link, f0, z0, **kw)
    if isinstance(kind, Lisp):
        ks = kind.k_switch if kind.k_switch is not None else max(link.m_r, link.m_t)
        return LispAligner(kind, link, f0, z0, k_switch=ks, alpha=kind.alpha_init, seed_mode=kind.seed_mode, **kw)
    if isinstance(kind, SimplePower):
        return SimplePowerAligner(kind, link, f0, z0, **kw)
    if isinstance(kind, PilotMmse):
        if k_max is None:
            raise ContractViolation("PilotMmse needs k_max")
        return PilotMmseAligner(kind, link, f0, z0, k_max=k_max, **kw)
    raise TypeError(f"unknown aligner kind {kind!r}")


def resolve_kind(kind, m_r: int, m_t: int):
    """Fill dimension-dependent defaults (LISP switch point)."""
    if isinstance(kind, Lisp) and kind.k_switch is None:
        return replace(kind, k_switch=max(m_r, m_t))
    return kind


# ---------------------------------------------------------------------------
# State-transition analysis helper (diagonal channels)
# ---------------------------------------------------------------------------


def state_transition_matrix(h, alpha: float, beta: float, rho: float) -> np.ndarray:
    """``[[I, sqrt(rho) beta H], [sqrt(rho) alpha H, I]]`` for ``H = diag(h)``."""
    H = np.diag(np.asarray(h, dtype=float))
    eye = np.eye(len(h))
    sr = np.sqrt(rho)
    return np.block([[eye, sr * beta * H], [sr * alpha * H, eye]]).astype(complex)


def state_transition_eigendecomposition(h, alpha: float, beta: float, rho: float):
    """Closed-form ``(U, Lambda)`` with ``S = U Lambda U^-1``.

    Eigenvalues are ``1 + sqrt(rho alpha beta) h_i`` followed by
    ``1 - sqrt(rho alpha beta) h_i``; ``U`` is unitary only when
    ``alpha == beta``.
    """
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise ContractViolation("h must be strictly positive")
    if min(alpha, beta, rho) <= 0:
        raise ContractViolation("alpha, beta, rho must be > 0")
    eye = np.eye(len(h))
    a = np.sqrt(beta / (alpha + beta))
    b = np.sqrt(alpha / (alpha + beta))
    U = np.block([[a * eye, a * eye], [b * eye, -b * eye]]).astype(complex)
    g = np.sqrt(rho * alpha * beta) * h
    Lam = np.diag(np.concatenate([1 + g, 1 - g])).astype(complex)
    return U, Lam
