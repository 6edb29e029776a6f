import numpy as np
import pytest
from dataclasses import replace

from beamalign.aligners import Lisp, PilotMmse, SimplePower, SlsOptimal, SlsSuboptimal, SummedPower, kind_label
from beamalign.channel import ChannelSpec, DiagonalReal, SparseMmWave
from beamalign.errors import ConfigError
from beamalign.harness import (
    RunError,
    SimConfig,
    run_monte_carlo,
    run_single,
    simulate_chunk,
    sweep_antennas,
    sweep_kswitch,
    sweep_snr,
    thread_count,
)

SMALL = SimConfig(channel=ChannelSpec(3, 6), k_max=12, runs=10, chunk_size=4,
                  algorithms=(SlsOptimal(), SlsSuboptimal(), SummedPower(), Lisp(), SimplePower(), PilotMmse()))


class TestConfig:
    def test_defaults(self):
        c = SimConfig()
        assert (c.channel.m_r, c.channel.m_t, c.k_max, c.runs, c.b_bits) == (4, 32, 100, 2000, 16)
        assert c.link.rho_o == pytest.approx(0.1)
        assert len(c.algorithms) == 7

    @pytest.mark.parametrize("kw,key", [
        (dict(runs=0), "runs"), (dict(k_max=0), "k_max"), (dict(algorithms=()), "algorithms"),
        (dict(algorithms=(SummedPower(), SummedPower())), "algorithms"), (dict(b_bits=0), "b_bits"),
        (dict(k_max=10, algorithms=(PilotMmse(),)), "k_max"),
    ])
    def test_invalid(self, kw, key):
        with pytest.raises(ConfigError) as info:
            SimConfig(**kw)
        assert info.value.key == key

    def test_thread_env(self, monkeypatch):
        monkeypatch.setenv("BEAMALIGN_THREADS", "3")
        assert thread_count() == 3
        monkeypatch.setenv("BEAMALIGN_THREADS", "x")
        with pytest.raises(ConfigError):
            thread_count()


class TestMonteCarlo:
    def test_shapes_and_ranges(self):
        res = run_monte_carlo(SMALL, threads=1)
        assert list(res.curves) == SMALL.labels
        for c in res.curves.values():
            assert c.mean_gain.shape == (13,)
            assert np.all((c.mean_gain >= 0) & (c.mean_gain <= 1 + 1e-8))
            assert np.all((c.mean_angle_sq >= 0) & (c.mean_angle_sq <= (np.pi / 2) ** 2))

    def test_deterministic(self):
        a, b = run_monte_carlo(SMALL, threads=1), run_monte_carlo(SMALL, threads=1)
        for label in SMALL.labels:
            np.testing.assert_array_equal(a.curves[label].mean_gain, b.curves[label].mean_gain)

    def test_thread_equivalence(self):
        a, b = run_monte_carlo(SMALL, threads=1), run_monte_carlo(SMALL, threads=3)
        for label in SMALL.labels:
            np.testing.assert_array_equal(a.curves[label].mean_gain, b.curves[label].mean_gain)
            np.testing.assert_array_equal(a.curves[label].mean_angle_sq, b.curves[label].mean_angle_sq)

    def test_single_run_aggregate(self):
        cfg = replace(SMALL, runs=1)
        res = run_monte_carlo(cfg, threads=1)
        for kind in cfg.algorithms:
            recs = run_single(cfg, kind, 0)
            np.testing.assert_allclose(res.curves[kind_label(kind)].mean_gain, [r.norm_gain for r in recs],
                                       atol=1e-12)
            assert res.curves[kind_label(kind)].sd_gain.max() == 0

    def test_mean_additivity(self):
        res = run_monte_carlo(replace(SMALL, runs=20), threads=1)
        a = simulate_chunk(SMALL, 0, 10)
        b = simulate_chunk(SMALL, 10, 20)
        for label in SMALL.labels:
            combined = (a.sums[label][0] + b.sums[label][0]) / 20
            np.testing.assert_allclose(res.curves[label].mean_gain, combined, atol=1e-12)

    def test_run_single_matches_batch(self):
        res = run_monte_carlo(SMALL, keep_runs=True, threads=1)
        for kind in SMALL.algorithms:
            recs = run_single(SMALL, kind, 7)
            np.testing.assert_allclose(res.per_run_gain[kind_label(kind)][7], [r.norm_gain for r in recs],
                                       atol=1e-10)

    def test_run_single_repeatable(self):
        assert run_single(SMALL, SummedPower(), 3) == run_single(SMALL, SummedPower(), 3)

    def test_degenerate_switch_equivalence(self):
        cfg = replace(SMALL, algorithms=(SlsSuboptimal(), Lisp(k_switch=12)))
        res = run_monte_carlo(cfg, threads=1)
        np.testing.assert_array_equal(res.curves["sls_suboptimal"].mean_gain, res.curves["lisp@12"].mean_gain)

    def test_simple_power_closed_form(self):
        cfg = SimConfig(channel=ChannelSpec(2, 2, DiagonalReal((2.0, 1.0))), k_max=6, runs=1, noiseless=True,
                        snr_db_o=0, snr_db_e=0, algorithms=(SimplePower(),))
        recs = run_single(cfg, SimplePower(), 0)
        tan0 = np.tan(recs[0].angle_rad)
        for r in recs:
            assert r.angle_rad == pytest.approx(np.arctan(tan0 / 4**r.k), abs=1e-9)
        gains = [r.norm_gain for r in recs]
        assert np.all(np.diff(gains[1:]) >= -1e-15)

    def test_independent_noise_changes_results(self):
        cfg = replace(SMALL, algorithms=(SlsSuboptimal(), Lisp(k_switch=12)), common_noise=False)
        res = run_monte_carlo(cfg, threads=1)
        assert not np.array_equal(res.curves["sls_suboptimal"].mean_gain, res.curves["lisp@12"].mean_gain)

    def test_feedback_bits(self):
        res = run_monte_carlo(SMALL, threads=1)
        assert res.curves["sls_suboptimal"].feedback_bits == 12 * 16 * 9
        assert res.curves["lisp"].feedback_bits == 6 * 16 * 9
        assert res.curves["summed_power"].feedback_bits == 0

    def test_error_context(self):
        cfg = SimConfig(channel=ChannelSpec(2, 3), k_max=4, runs=3, noiseless=True, snr_db_o=-np.inf,
                        snr_db_e=-np.inf, algorithms=(SimplePower(),))
        with pytest.raises(RunError) as info:
            run_monte_carlo(cfg, threads=1)
        assert info.value.algorithm == "simple_power"
        assert info.value.k == 1
        assert info.value.runs == (0, 3)


class TestSweeps:
    def test_single_point_antenna_sweep(self):
        cfg = replace(SMALL, algorithms=(SummedPower(),))
        rows = sweep_antennas(cfg, [6], threads=1)
        direct = run_monte_carlo(cfg, threads=1).curves["summed_power"]
        assert rows[0].param == 6
        assert rows[0].mean_norm_gain == direct.mean_gain[-1]
        assert rows[0].stderr == direct.stderr_gain()[-1]

    def test_antenna_sweep_rejects_diagonal(self):
        cfg = replace(SMALL, channel=ChannelSpec(2, 2, DiagonalReal((2.0, 1.0))), algorithms=(SummedPower(),))
        with pytest.raises(ConfigError):
            sweep_antennas(cfg, [2])

    def test_kswitch_one_is_summed(self):
        cfg = replace(SMALL, algorithms=(SummedPower(), Lisp()))
        rows = sweep_kswitch(cfg, [1, 4], threads=1)
        summed = run_monte_carlo(cfg, threads=1).curves["summed_power"].mean_gain[-1]
        assert [r.param for r in rows] == [1, 4]
        assert rows[0].mean_norm_gain == pytest.approx(summed, abs=1e-12)

    def test_snr_sweep_noiseless_extreme(self):
        cfg = SimConfig(channel=ChannelSpec(4, 8, SparseMmWave(clusters=1)), k_max=30, runs=20, noiseless=True,
                        algorithms=(SlsOptimal(), SimplePower(), PilotMmse()))
        rows = sweep_snr(cfg, [20.0], threads=1)
        assert all(r.mean_norm_gain >= 0.999 for r in rows)

    def test_zero_snr_pilot_is_random_beam(self):
        cfg = replace(SMALL, snr_db_o=-np.inf, snr_db_e=-np.inf, algorithms=(SimplePower(), PilotMmse()))
        res = run_monte_carlo(cfg, threads=1)
        assert res.curves["pilot_mmse"].mean_gain[-1] == res.curves["simple_power"].mean_gain[0]
