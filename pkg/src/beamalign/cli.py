"""Command-line front end: config parsing, dispatch, CSV and plot-script output.

Config files are UTF-8 ``key = value`` lines (``#`` starts a comment).
Command-line flags override the file. Example::

    m_t = 32
    snr_db = -10
    algorithms = summed_power, lisp, simple_power
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .aligners import (
    DEFAULT_ALPHA,
    KIND_ORDER,
    SEED_MODES,
    Lisp,
    SlsSuboptimal,
    all_kinds,
    kind_from_name,
    kind_label,
    kind_rank,
)
from .channel import IID, ChannelSpec, DiagonalReal, SparseMmWave
from .errors import BeamAlignError, ConfigError
from .harness import RunError, SimConfig, run_monte_carlo, sweep_antennas, sweep_kswitch, sweep_snr
from .metrics import cost_report

CSV_HEADER = ("algorithm", "k", "mean_norm_gain", "mean_angle_sq", "runs", "seed")
DEFAULTS = {
    "m_r": 4,
    "m_t": 32,
    "snr_db_o": -10.0,
    "snr_db_e": -10.0,
    "k_max": 100,
    "runs": 2000,
    "seed": 0,
    "algorithms": "all",
    "b_bits": 16,
    "k_switch": None,
    "alpha_init": DEFAULT_ALPHA,
    "channel": "iid",
    "clusters": 3,
    "angular_spread_deg": 120.0,
    "noiseless": False,
    "common_noise": True,
    "seed_mode": "history",
}


def _as_int(key, text):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected an integer, got {text!r}")


def _as_float(key, text):
    try:
        val = float(text)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {text!r}")
    if not np.isfinite(val):
        raise ConfigError(key, f"expected a finite number, got {text!r}")
    return val


def _as_bool(key, text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected true/false, got {text!r}")


def _as_opt_int(key, text):
    if text is None or str(text).strip().lower() in ("", "none", "max"):
        return None
    return _as_int(key, text)


_PARSERS = {
    "m_r": _as_int,
    "m_t": _as_int,
    "snr_db": _as_float,
    "snr_db_o": _as_float,
    "snr_db_e": _as_float,
    "k_max": _as_int,
    "runs": _as_int,
    "seed": _as_int,
    "algorithms": lambda k, v: str(v).strip(),
    "b_bits": _as_int,
    "k_switch": _as_opt_int,
    "alpha_init": _as_float,
    "channel": lambda k, v: str(v).strip(),
    "clusters": _as_int,
    "angular_spread_deg": _as_float,
    "noiseless": _as_bool,
    "common_noise": _as_bool,
    "seed_mode": lambda k, v: str(v).strip(),
}


def read_config_file(path) -> dict:
    """Raw ``key -> value`` pairs from a config file; unknown keys are rejected."""
    raw = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(key, f"unknown key (allowed: {', '.join(sorted(_PARSERS))})")
        raw[key] = value
    return raw


def _resolve(raw: dict) -> dict:
    values = dict(DEFAULTS)
    parsed = {k: _PARSERS[k](k, v) for k, v in raw.items()}
    if "snr_db" in parsed:
        values["snr_db_o"] = values["snr_db_e"] = parsed.pop("snr_db")
    values.update(parsed)
    return values


def parse_channel(text: str, m_r: int, m_t: int, clusters: int = 3, spread: float = 120.0) -> ChannelSpec:
    text = text.strip().lower()
    if text == "iid":
        return ChannelSpec(m_r, m_t, IID())
    if text == "sparse":
        return ChannelSpec(m_r, m_t, SparseMmWave(clusters=clusters, angular_spread_deg=spread))
    if text.startswith("diag:"):
        try:
            h = tuple(float(x) for x in text[5:].split(","))
        except ValueError:
            raise ConfigError("channel", f"bad diagonal entries in {text!r}")
        return ChannelSpec(len(h), len(h), DiagonalReal(h))
    raise ConfigError("channel", f"expected iid, sparse or diag:h1,h2,..., got {text!r}")


def parse_algorithms(text: str, k_switch=None, alpha_init=DEFAULT_ALPHA, seed_mode="history") -> tuple:
    names = [n.strip() for n in text.split(",") if n.strip()]
    if not names:
        raise ConfigError("algorithms", "empty list")
    kinds = all_kinds() if names == ["all"] else []
    if not kinds:
        for name in names:
            try:
                kinds.append(kind_from_name(name))
            except KeyError:
                allowed = ", ".join(cls.name for cls in KIND_ORDER)
                raise ConfigError("algorithms", f"unknown algorithm {name!r} (allowed: {allowed})")
    out = []
    for kind in kinds:
        if isinstance(kind, Lisp):
            kind = Lisp(k_switch=k_switch, alpha_init=alpha_init, seed_mode=seed_mode)
        elif isinstance(kind, SlsSuboptimal):
            kind = SlsSuboptimal(alpha_init=alpha_init)
        out.append(kind)
    return tuple(sorted(out, key=kind_rank))


def build_config(values: dict) -> SimConfig:
    for key in ("m_r", "m_t", "k_max", "runs", "b_bits", "clusters"):
        if values[key] < 1:
            raise ConfigError(key, f"must be >= 1, got {values[key]}")
    if values["alpha_init"] <= 0:
        raise ConfigError("alpha_init", "must be > 0")
    if values["k_switch"] is not None and values["k_switch"] < 1:
        raise ConfigError("k_switch", "must be >= 1")
    if values["seed_mode"] not in SEED_MODES:
        raise ConfigError("seed_mode", f"expected one of {', '.join(SEED_MODES)}")
    channel = parse_channel(values["channel"], values["m_r"], values["m_t"],
                            values["clusters"], values["angular_spread_deg"])
    algos = parse_algorithms(values["algorithms"], values["k_switch"], values["alpha_init"], values["seed_mode"])
    return SimConfig(
        channel=channel,
        snr_db_o=values["snr_db_o"],
        snr_db_e=values["snr_db_e"],
        k_max=values["k_max"],
        runs=values["runs"],
        base_seed=values["seed"],
        algorithms=algos,
        common_noise=values["common_noise"],
        b_bits=values["b_bits"],
        noiseless=values["noiseless"],
    )


def parse_config(path=None, overrides: dict | None = None) -> SimConfig:
    """Validated :class:`SimConfig` from an optional file plus flag overrides."""
    raw = read_config_file(path) if path else {}
    over = dict(overrides or {})
    if "snr_db" in over:
        # a link-wide flag beats per-link keys from the file
        raw.pop("snr_db_o", None)
        raw.pop("snr_db_e", None)
    raw.update(over)
    return build_config(_resolve(raw))


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return "%.12g" % x


def _ordered_labels(config: SimConfig) -> list[str]:
    kinds = sorted(config.algorithms, key=lambda k: (kind_rank(k), getattr(k, "k_switch", None) or 0))
    return [kind_label(k) for k in kinds]


def csv_text(result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    cfg = result.config
    for label in _ordered_labels(cfg):
        c = result.curves[label]
        for k in range(cfg.k_max + 1):
            w.writerow([label, k, _fmt(c.mean_gain[k]), _fmt(c.mean_angle_sq[k]), c.runs, cfg.base_seed])
    return buf.getvalue()


def emit_csv(result, path) -> None:
    Path(path).write_text(csv_text(result), encoding="utf-8", newline="\n")


def load_csv(path) -> dict[str, dict[str, np.ndarray]]:
    """Read an :func:`emit_csv` file back into ``label -> {"gain", "angle_sq"}`` arrays."""
    rows: dict[str, list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        for row in reader:
            rows.setdefault(row["algorithm"], []).append(
                (int(row["k"]), float(row["mean_norm_gain"]), float(row["mean_angle_sq"])))
    out = {}
    for label, items in rows.items():
        items.sort()
        out[label] = {"gain": np.array([g for _, g, _ in items]), "angle_sq": np.array([a for _, _, a in items])}
    return out


def sweep_csv_text(rows, param: str, seed: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((param, "algorithm", "mean_norm_gain", "stderr", "runs", "seed"))
    for r in rows:
        w.writerow([_fmt(r.param), r.algorithm, _fmt(r.mean_norm_gain), _fmt(r.stderr), r.runs, seed])
    return buf.getvalue()


_RUN_PLOT = '''"""Gain and angle versus iteration, one curve per algorithm."""
import csv
import sys

import matplotlib.pyplot as plt

CSV = {csv!r}

curves = {{}}
with open(CSV, newline="") as fh:
    for row in csv.DictReader(fh):
        c = curves.setdefault(row["algorithm"], ([], [], []))
        c[0].append(int(row["k"]))
        c[1].append(float(row["mean_norm_gain"]))
        c[2].append(float(row["mean_angle_sq"]))

fig, (ax_g, ax_a) = plt.subplots(1, 2, figsize=(11, 4))
for label, (k, gain, ang) in curves.items():
    ax_g.plot(k, gain, label=label)
    ax_a.plot(k, ang, label=label)
ax_g.set_xlabel("k")
ax_g.set_ylabel("normalized |z* H f|^2")
ax_a.set_xlabel("k")
ax_a.set_ylabel("mean |phi_k|^2")
ax_g.legend()
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else {png!r})
'''

_SWEEP_PLOT = '''"""Normalized gain versus {param}, one curve per algorithm."""
import csv
import sys

import matplotlib.pyplot as plt

CSV = {csv!r}

curves = {{}}
with open(CSV, newline="") as fh:
    for row in csv.DictReader(fh):
        c = curves.setdefault(row["algorithm"], ([], [], []))
        c[0].append(float(row[{param!r}]))
        c[1].append(float(row["mean_norm_gain"]))
        c[2].append(float(row["stderr"]))

fig, ax = plt.subplots(figsize=(6, 4))
for label, (x, gain, se) in curves.items():
    ax.errorbar(x, gain, yerr=se, marker="o", capsize=2, label=label)
ax.set_xlabel({param!r})
ax.set_ylabel("normalized |z* H f|^2")
ax.legend()
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else {png!r})
'''


def plot_script_text(csv_path, param: str | None = None) -> str:
    """Matplotlib script for a run CSV (two panels) or a sweep CSV (one panel)."""
    csv_path = str(csv_path)
    png = str(Path(csv_path).with_suffix(".png"))
    if param is None:
        return _RUN_PLOT.format(csv=csv_path, png=png)
    return _SWEEP_PLOT.format(csv=csv_path, png=png, param=param)


def emit_plot_script(csv_path, path, param: str | None = None) -> None:
    if not Path(csv_path).exists():
        raise FileNotFoundError(f"CSV {csv_path} does not exist")
    Path(path).write_text(plot_script_text(csv_path, param), encoding="utf-8", newline="\n")


def report_cost(config: SimConfig, out=None) -> list:
    out = sys.stdout if out is None else out
    spec = config.channel
    reports = []
    for kind in sorted(config.algorithms, key=kind_rank):
        ks = getattr(kind, "k_switch", None)
        reports.append((kind_label(kind), cost_report(kind, config.k_max, spec.m_r, spec.m_t, config.b_bits, ks)))
    width = max(len(label) for label, _ in reports)
    print(f"{'algorithm':<{width}}  {'compute':<28}  feedback_bits", file=out)
    for label, r in reports:
        print(f"{label:<{width}}  {r.flops_order:<28}  {r.feedback_bits}", file=out)
    return [r for _, r in reports]


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_FLAG_KEYS = {
    "mr": "m_r",
    "mt": "m_t",
    "snr_db": "snr_db",
    "snr_db_o": "snr_db_o",
    "snr_db_e": "snr_db_e",
    "kmax": "k_max",
    "runs": "runs",
    "seed": "seed",
    "algos": "algorithms",
    "kswitch": "k_switch",
    "alpha_init": "alpha_init",
    "channel": "channel",
    "b_bits": "b_bits",
    "seed_mode": "seed_mode",
}


def _list(kind):
    def parse(text):
        try:
            return [kind(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}")
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beamalign", description="Iterative TDD beam-alignment experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--mr", type=str)
    common.add_argument("--mt", type=str)
    common.add_argument("--snr-db", type=str, help="sets both link SNRs")
    common.add_argument("--snr-db-o", type=str)
    common.add_argument("--snr-db-e", type=str)
    common.add_argument("--kmax", type=str)
    common.add_argument("--runs", type=str)
    common.add_argument("--seed", type=str)
    common.add_argument("--algos", type=str, help="comma list or 'all'")
    common.add_argument("--kswitch", type=str)
    common.add_argument("--alpha-init", type=str)
    common.add_argument("--channel", type=str, help="iid | sparse | diag:h1,h2,...")
    common.add_argument("--b-bits", type=str)
    common.add_argument("--seed-mode", type=str, help="LISP sum seeding at the switch")
    common.add_argument("--noiseless", action="store_true")
    common.add_argument("--out", help="CSV output path (stdout if omitted)")
    common.add_argument("--plot", help="also write a matplotlib script here (needs --out)")
    common.add_argument("--threads", type=int, help="worker threads (default: BEAMALIGN_THREADS or CPU count)")
    sub.add_parser("run", parents=[common], help="per-iteration curves")
    sp = sub.add_parser("sweep-antennas", parents=[common], help="gain at k_max versus M_t")
    sp.add_argument("--mt-list", type=_list(int), default=list(range(6, 66, 2)))
    sp = sub.add_parser("sweep-kswitch", parents=[common], help="LISP gain at k_max versus k_switch")
    sp.add_argument("--kswitch-list", type=_list(int), default=[1, 4, 8, 16, 32, 64])
    sp = sub.add_parser("sweep-snr", parents=[common], help="gain at k_max versus SNR")
    sp.add_argument("--snr-list", type=_list(float), default=[-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0])
    sub.add_parser("report-cost", parents=[common], help="compute order and feedback bits per algorithm")
    return p


def config_from_args(args) -> SimConfig:
    over = {}
    for flag, key in _FLAG_KEYS.items():
        val = getattr(args, flag, None)
        if val is not None:
            over[key] = val
    if args.noiseless:
        over["noiseless"] = True
    return parse_config(args.config, over)


def _write(text: str, path) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _error_summary(exc: Exception) -> dict:
    info = {"status": "error", "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, RunError):
        info.update(algorithm=exc.algorithm, runs=list(exc.runs), k=exc.k, cause=type(exc.cause).__name__)
    if isinstance(exc, ConfigError):
        info["key"] = exc.key
    return info


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        cmd = args.command
        if cmd == "report-cost":
            report_cost(config)
            return 0
        if args.plot and not args.out:
            raise ConfigError("plot", "--plot needs --out so the script can reference the CSV")
        param = None
        if cmd == "run":
            text = csv_text(run_monte_carlo(config, threads=args.threads))
        elif cmd == "sweep-antennas":
            param = "m_t"
            rows = sweep_antennas(config, args.mt_list, threads=args.threads)
            text = sweep_csv_text(rows, param, config.base_seed)
        elif cmd == "sweep-kswitch":
            param = "k_switch"
            rows = sweep_kswitch(config, args.kswitch_list, threads=args.threads)
            text = sweep_csv_text(rows, param, config.base_seed)
        else:
            param = "snr_db"
            rows = sweep_snr(config, args.snr_list, threads=args.threads)
            text = sweep_csv_text(rows, param, config.base_seed)
        _write(text, args.out)
        if args.plot:
            emit_plot_script(args.out, args.plot, param)
        return 0
    except (BeamAlignError, OSError, ValueError) as exc:
        print(json.dumps(_error_summary(exc), sort_keys=True), file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1
