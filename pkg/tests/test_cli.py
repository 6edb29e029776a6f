import ast
import io
import json

import numpy as np
import pytest

from beamalign.aligners import Lisp, PilotMmse, SlsSuboptimal, SummedPower
from beamalign.channel import DiagonalReal, SparseMmWave
from beamalign import cli
from beamalign.cli import (
    CSV_HEADER,
    csv_text,
    emit_csv,
    emit_plot_script,
    load_csv,
    main,
    parse_algorithms,
    parse_channel,
    parse_config,
    plot_script_text,
    report_cost,
)
from beamalign.errors import ConfigError, DegenerateError
from beamalign.harness import RunError, SimConfig, run_monte_carlo

TINY = ["--mr", "2", "--mt", "3", "--kmax", "3", "--runs", "4", "--algos", "summed_power,sls_suboptimal"]


def write(tmp_path, text, name="cfg.txt"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestParseConfig:
    def test_empty_file_defaults(self, tmp_path):
        cfg = parse_config(write(tmp_path, ""))
        assert cfg == SimConfig()
        assert cfg == parse_config()
        assert cfg.channel.m_r == 4 and cfg.channel.m_t == 32
        assert cfg.link.rho_o == pytest.approx(0.1) and cfg.link.rho_e == pytest.approx(0.1)

    def test_db_conversion(self, tmp_path):
        cfg = parse_config(write(tmp_path, "snr_db_o = 20\n"))
        assert cfg.link.rho_o == pytest.approx(100.0)
        assert cfg.link.rho_e == pytest.approx(0.1)

    def test_snr_sets_both(self, tmp_path):
        cfg = parse_config(write(tmp_path, "snr_db = 0  # both links\n"))
        assert cfg.snr_db_o == cfg.snr_db_e == 0.0

    def test_flags_override_file(self, tmp_path):
        path = write(tmp_path, "runs = 50\nsnr_db_o = 3\nk_max = 40\n")
        cfg = parse_config(path, {"runs": "9", "snr_db": "5"})
        assert cfg.runs == 9 and cfg.k_max == 40
        assert cfg.snr_db_o == cfg.snr_db_e == 5.0

    def test_algorithm_parameters(self, tmp_path):
        cfg = parse_config(write(tmp_path, "algorithms = lisp, sls_suboptimal\nk_switch = 8\nalpha_init = 50\n"))
        assert cfg.algorithms == (SlsSuboptimal(alpha_init=50.0), Lisp(k_switch=8, alpha_init=50.0))

    @pytest.mark.parametrize("text,key", [
        ("bogus = 1", "bogus"), ("runs = many", "runs"), ("runs = 0", "runs"), ("alpha_init = -1", "alpha_init"),
        ("algorithms = bsm", "algorithms"), ("channel = rayleigh", "channel"), ("noiseless = maybe", "noiseless"),
        ("snr_db_o = nan", "snr_db_o"), ("seed_mode = random", "seed_mode"), ("k_switch = 0", "k_switch"),
    ])
    def test_errors_name_key(self, tmp_path, text, key):
        with pytest.raises(ConfigError) as info:
            parse_config(write(tmp_path, text + "\n"))
        assert info.value.key == key
        assert str(info.value).startswith(key)

    def test_malformed_line(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(write(tmp_path, "runs 5\n"))

    def test_channels(self):
        assert isinstance(parse_channel("sparse", 4, 8).model, SparseMmWave)
        spec = parse_channel("diag:3,2,1", 4, 8)
        assert (spec.m_r, spec.m_t) == (3, 3)
        assert spec.model == DiagonalReal((3.0, 2.0, 1.0))
        with pytest.raises(ConfigError):
            parse_channel("diag:a,b", 2, 2)

    def test_algorithm_order(self):
        kinds = parse_algorithms("pilot_mmse,summed_power")
        assert kinds == (SummedPower(), PilotMmse())


@pytest.fixture(scope="module")
def result():
    cfg = parse_config(None, {"m_r": "2", "m_t": "3", "k_max": "3", "runs": "4",
                              "algorithms": "summed_power,sls_suboptimal"})
    return run_monte_carlo(cfg, threads=1)


class TestCsv:
    def test_rows(self, result):
        lines = csv_text(result).split("\n")
        assert lines[0] == ",".join(CSV_HEADER)
        assert lines[-1] == ""
        assert len(lines) - 2 == 8
        assert [l.split(",")[0] for l in lines[1:-1]] == ["sls_suboptimal"] * 4 + ["summed_power"] * 4
        assert [int(l.split(",")[1]) for l in lines[1:5]] == [0, 1, 2, 3]

    def test_round_trip(self, result, tmp_path):
        path = tmp_path / "out.csv"
        emit_csv(result, path)
        assert b"\r" not in path.read_bytes()
        back = load_csv(path)
        for label, c in result.curves.items():
            np.testing.assert_allclose(back[label]["gain"], c.mean_gain, rtol=1e-11)
            np.testing.assert_allclose(back[label]["angle_sq"], c.mean_angle_sq, rtol=1e-11)
            assert back[label]["gain"].tolist() == [float(f"{x:.12g}") for x in c.mean_gain]

    def test_bad_header(self, tmp_path):
        with pytest.raises(ValueError):
            load_csv(write(tmp_path, "a,b\n1,2\n", "bad.csv"))


class TestPlotScript:
    def test_run_script(self, tmp_path):
        csv_path = write(tmp_path, "x", "r.csv")
        text = plot_script_text(csv_path)
        ast.parse(text)
        assert "subplots(1, 2" in text and str(csv_path) in text

    def test_sweep_script(self, tmp_path):
        text = plot_script_text(tmp_path / "s.csv", "m_t")
        ast.parse(text)
        assert "errorbar" in text and "subplots(1, 2" not in text

    def test_idempotent(self, tmp_path):
        csv_path = write(tmp_path, "x", "r.csv")
        emit_plot_script(csv_path, tmp_path / "a.py")
        first = (tmp_path / "a.py").read_bytes()
        emit_plot_script(csv_path, tmp_path / "a.py")
        assert (tmp_path / "a.py").read_bytes() == first

    def test_missing_csv(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            emit_plot_script(tmp_path / "none.csv", tmp_path / "a.py")


class TestMain:
    def test_run_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["run", *TINY, "--out", str(a)]) == 0
        assert main(["run", *TINY, "--out", str(b), "--threads", "2"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_run_with_plot(self, tmp_path):
        out, plot = tmp_path / "a.csv", tmp_path / "a.py"
        assert main(["run", *TINY, "--out", str(out), "--plot", str(plot)]) == 0
        assert plot.exists()

    def test_stdout(self, capsys):
        assert main(["run", *TINY]) == 0
        assert capsys.readouterr().out.startswith("algorithm,k,")

    def test_sweeps(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["sweep-antennas", *TINY, "--mt-list", "3,4", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("m_t,algorithm") and len(lines) == 5
        assert main(["sweep-kswitch", *TINY, "--kswitch-list", "1,2", "--out", str(out)]) == 0
        assert out.read_text().splitlines()[1].startswith("1,lisp@1,")
        assert main(["sweep-snr", *TINY, "--snr-list", "0,10", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 5

    def test_report_cost(self, capsys):
        assert main(["report-cost", "--algos", "all"]) == 0
        out = capsys.readouterr().out
        assert "57600" in out and str(32 * 16 * 36) in out

    def test_report_cost_function(self):
        buf = io.StringIO()
        reports = report_cost(SimConfig(), buf)
        assert [r.feedback_bits for r in reports] == [57600, 57600, 57600, 0, 18432, 0, 0]

    def test_config_error_exit(self, capsys):
        assert main(["run", "--runs", "0"]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["status"] == "error" and err["key"] == "runs"

    def test_run_error_exit(self, capsys, monkeypatch):
        def fail(config, threads=None):
            raise RunError("simple_power", (0, 4), 2, DegenerateError("zero vector"))

        monkeypatch.setattr(cli, "run_monte_carlo", fail)
        assert main(["run", *TINY]) == 1
        err = json.loads(capsys.readouterr().err)
        assert (err["algorithm"], err["k"], err["runs"], err["cause"]) == ("simple_power", 2, [0, 4], "DegenerateError")

    def test_plot_needs_out(self, capsys):
        assert main(["run", *TINY, "--plot", "p.py"]) == 2
