"""Monte Carlo engine for beam-alignment experiments.

Seeding is per run: run ``i`` draws its channel, initial beams and noise
from sub-streams keyed by ``(base_seed, i, purpose[, algorithm])``. Runs
are processed in fixed-size chunks (vectorized over the chunk) and the
chunk partial sums are combined in chunk order, so results do not depend
on how chunks are scheduled across threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .aligners import Lisp, PilotMmse, all_kinds, kind_label, make_aligner, resolve_kind
from .channel import ChannelSpec, DiagonalReal, reference_pair, sample_channel, sample_matrix, validate_spec
from .errors import BeamAlignError, ConfigError
from .metrics import IterationRecord, beam_angle, effective_gain
from .numerics import cgauss, make_rng, unit_random
from .pingpong import Link, LinkParams

_CHANNEL, _INIT, _NOISE = 0, 1, 2
DEFAULT_CHUNK = 250


@dataclass(frozen=True)
class SimConfig:
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    snr_db_o: float = -10.0
    snr_db_e: float = -10.0
    k_max: int = 100
    runs: int = 2000
    base_seed: int = 0
    algorithms: tuple = field(default_factory=lambda: tuple(all_kinds()))
    common_noise: bool = True
    b_bits: int = 16
    noiseless: bool = False
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs", "must be >= 1")
        if self.k_max < 1:
            raise ConfigError("k_max", "must be >= 1")
        if not self.algorithms:
            raise ConfigError("algorithms", "must be non-empty")
        if self.b_bits < 1:
            raise ConfigError("b_bits", "must be >= 1")
        if self.chunk_size < 1:
            raise ConfigError("chunk_size", "must be >= 1")
        labels = [kind_label(k) for k in self.algorithms]
        if len(set(labels)) != len(labels):
            raise ConfigError("algorithms", f"duplicate entries {labels}")
        for kind in self.algorithms:
            if isinstance(kind, PilotMmse) and self.k_max < max(self.channel.m_r, self.channel.m_t):
                raise ConfigError("k_max", "pilot_mmse needs k_max >= max(m_r, m_t)")

    @property
    def link(self) -> LinkParams:
        return LinkParams.from_db(self.snr_db_o, self.snr_db_e, self.noiseless)

    @property
    def labels(self) -> list[str]:
        return [kind_label(k) for k in self.algorithms]


class RunError(BeamAlignError):
    def __init__(self, algorithm: str, runs: tuple[int, int], k: int, cause: Exception):
        super().__init__(f"{algorithm} failed in runs [{runs[0]}, {runs[1]}) at k={k}: {cause}")
        self.algorithm = algorithm
        self.runs = runs
        self.k = k
        self.cause = cause


@dataclass
class Curve:
    """Per-k statistics for one algorithm (arrays of length ``k_max + 1``)."""

    mean_gain: np.ndarray
    mean_angle_sq: np.ndarray
    sd_gain: np.ndarray
    sd_angle_sq: np.ndarray
    feedback_bits: int
    runs: int

    def stderr_gain(self) -> np.ndarray:
        return self.sd_gain / np.sqrt(self.runs)

    def stderr_angle_sq(self) -> np.ndarray:
        return self.sd_angle_sq / np.sqrt(self.runs)


@dataclass
class AggregateResult:
    config: SimConfig
    curves: dict[str, Curve]
    per_run_gain: dict[str, np.ndarray] | None = None
    per_run_angle_sq: dict[str, np.ndarray] | None = None

    @property
    def runs(self) -> int:
        return self.config.runs


@dataclass
class _ChunkOut:
    sums: dict
    bits: dict
    gains: dict | None = None
    angles: dict | None = None


def thread_count() -> int:
    env = os.environ.get("BEAMALIGN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("BEAMALIGN_THREADS", f"not an integer: {env!r}")
    return os.cpu_count() or 1


def _alg_key(config: SimConfig, index: int) -> int:
    return 0 if config.common_noise else index + 1


def _draw_run_noise(config: SimConfig, run: int, key: int):
    spec = config.channel
    rng = make_rng(config.base_seed, run, _NOISE, key)
    n_o = cgauss((config.k_max, spec.m_r), rng)
    n_e = cgauss((config.k_max, spec.m_t), rng)
    p_o = cgauss((spec.m_r, spec.m_t), rng)
    p_e = cgauss((spec.m_t, spec.m_r), rng)
    return n_o, n_e, p_o, p_e


def _draw_run_init(config: SimConfig, run: int, key: int):
    rng = make_rng(config.base_seed, run, _INIT, key)
    return unit_random(config.channel.m_t, rng), unit_random(config.channel.m_r, rng)


def sample_run_channel(config: SimConfig, run: int):
    return sample_channel(config.channel, make_rng(config.base_seed, run, _CHANNEL))


def simulate_chunk(config: SimConfig, start: int, stop: int, kinds=None, keep_runs: bool = False) -> _ChunkOut:
    """Run ``kinds`` (default: all configured) over runs ``[start, stop)``."""
    kinds = list(config.algorithms) if kinds is None else list(kinds)
    index_of = {kind_label(k): i for i, k in enumerate(config.algorithms)}
    runs = range(start, stop)
    validate_spec(config.channel)
    H = np.stack([sample_matrix(config.channel, make_rng(config.base_seed, r, _CHANNEL)) for r in runs])
    sigma, _, f_opt = reference_pair(config.channel, H)
    gain_max = np.atleast_1d(sigma) ** 2
    params = config.link
    spec = config.channel
    cache = {}

    def draws(key):
        if key not in cache:
            noise = [_draw_run_noise(config, r, key) for r in runs]
            init = [_draw_run_init(config, r, key) for r in runs]
            cache[key] = (
                tuple(np.stack([n[i] for n in noise]) for i in range(4)),
                np.stack([x[0] for x in init]),
                np.stack([x[1] for x in init]),
            )
        return cache[key]

    out = _ChunkOut(sums={}, bits={}, gains={} if keep_runs else None, angles={} if keep_runs else None)
    for kind in kinds:
        label = kind_label(kind)
        key = _alg_key(config, index_of.get(label, len(index_of)))
        (n_o, n_e, p_o, p_e), f0, z0 = draws(key)
        link = Link(H, params, n_o, n_e, config.b_bits, pilot_noise=(p_o, p_e))
        resolved = resolve_kind(kind, spec.m_r, spec.m_t)
        gains = np.empty((len(runs), config.k_max + 1))
        angles = np.empty_like(gains)
        k = 0
        try:
            aligner = make_aligner(resolved, link, f0, z0, k_max=config.k_max)
            for k in range(config.k_max + 1):
                if k:
                    aligner.step()
                gains[:, k] = effective_gain(H, aligner.f, aligner.z) / gain_max
                angles[:, k] = beam_angle(f_opt, aligner.f) ** 2
        except BeamAlignError as exc:
            raise RunError(label, (start, stop), k, exc) from exc
        out.sums[label] = (gains.sum(axis=0), (gains**2).sum(axis=0), angles.sum(axis=0), (angles**2).sum(axis=0))
        out.bits[label] = link.log.bits
        if keep_runs:
            out.gains[label] = gains
            out.angles[label] = angles
    return out


def run_single(config: SimConfig, kind, run_index: int) -> list[IterationRecord]:
    """Per-iteration records of one algorithm on one run."""
    label = kind_label(kind)
    if label not in config.labels:
        config = replace(config, algorithms=tuple(config.algorithms) + (kind,))
    out = simulate_chunk(config, run_index, run_index + 1, kinds=[kind], keep_runs=True)
    g = out.gains[label][0]
    a = np.sqrt(out.angles[label][0])
    return [IterationRecord(k, float(g[k]), float(a[k])) for k in range(config.k_max + 1)]


def _sd(total, total_sq, n):
    if n < 2:
        return np.zeros_like(total)
    var = (total_sq - total**2 / n) / (n - 1)
    return np.sqrt(np.maximum(var, 0.0))


def run_monte_carlo(config: SimConfig, keep_runs: bool = False, threads: int | None = None) -> AggregateResult:
    """Average every configured algorithm over ``config.runs`` runs."""
    bounds = [(s, min(s + config.chunk_size, config.runs)) for s in range(0, config.runs, config.chunk_size)]
    threads = thread_count() if threads is None else threads
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda b: simulate_chunk(config, *b, keep_runs=keep_runs), bounds))
    else:
        chunks = [simulate_chunk(config, *b, keep_runs=keep_runs) for b in bounds]
    n = config.runs
    curves = {}
    for label in config.labels:
        acc = [np.zeros(config.k_max + 1) for _ in range(4)]
        for ch in chunks:
            for i in range(4):
                acc[i] = acc[i] + ch.sums[label][i]
        bits = {ch.bits[label] for ch in chunks}
        curves[label] = Curve(
            mean_gain=acc[0] / n,
            mean_angle_sq=acc[2] / n,
            sd_gain=_sd(acc[0], acc[1], n),
            sd_angle_sq=_sd(acc[2], acc[3], n),
            feedback_bits=max(bits),
            runs=n,
        )
    result = AggregateResult(config=config, curves=curves)
    if keep_runs:
        result.per_run_gain = {l: np.concatenate([c.gains[l] for c in chunks]) for l in config.labels}
        result.per_run_angle_sq = {l: np.concatenate([c.angles[l] for c in chunks]) for l in config.labels}
    return result


@dataclass(frozen=True)
class SweepRow:
    param: float
    algorithm: str
    mean_norm_gain: float
    stderr: float
    runs: int


def _rows_at(result: AggregateResult, param, k: int) -> list[SweepRow]:
    return [
        SweepRow(param, label, float(c.mean_gain[k]), float(c.stderr_gain()[k]), c.runs)
        for label, c in result.curves.items()
    ]


def sweep_antennas(config: SimConfig, m_t_values, threads: int | None = None) -> list[SweepRow]:
    """Normalized gain at ``k_max`` versus transmit array size."""
    if isinstance(config.channel.model, DiagonalReal):
        raise ConfigError("channel", "antenna sweep needs an iid or sparse channel")
    rows = []
    for m_t in m_t_values:
        cfg = replace(config, channel=replace(config.channel, m_t=int(m_t)))
        rows += _rows_at(run_monte_carlo(cfg, threads=threads), int(m_t), cfg.k_max)
    return rows


def sweep_kswitch(config: SimConfig, k_switch_values, alpha_init: float | None = None,
                  threads: int | None = None) -> list[SweepRow]:
    """LISP gain at ``k_max`` per switch point; all points share channels and noise.

    Step size and seeding come from the first configured LISP, if any.
    """
    lisp = [k for k in config.algorithms if isinstance(k, Lisp)]
    base = lisp[0] if lisp else Lisp()
    if alpha_init is None:
        alpha_init = base.alpha_init
    kinds = tuple(replace(base, k_switch=int(ks), alpha_init=alpha_init) for ks in k_switch_values)
    cfg = replace(config, algorithms=kinds, common_noise=True)
    result = run_monte_carlo(cfg, threads=threads)
    return [
        replace(row, param=int(ks))
        for ks, row in zip(k_switch_values, _rows_at(result, 0, cfg.k_max))
    ]


def sweep_snr(config: SimConfig, snr_db_values, threads: int | None = None) -> list[SweepRow]:
    """Gain at ``k_max`` per common SNR ``rho = rho_o = rho_e``."""
    rows = []
    for snr in snr_db_values:
        cfg = replace(config, snr_db_o=float(snr), snr_db_e=float(snr))
        rows += _rows_at(run_monte_carlo(cfg, threads=threads), float(snr), cfg.k_max)
    return rows
