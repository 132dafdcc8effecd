import numpy as np
import pytest

from polarlattice.design import make_design, uncoded_dimension_error, uncoded_wer
from polarlattice.lattice import LatticeDesign, sigma2_for_vnr
from polarlattice.polar import NestedCodeFamily, crc_check
from polarlattice.sim import SimPlan, SimStats, run_wer, stats_to_csv, transmit_point


@pytest.fixture(scope="module")
def small_design():
    return make_design(32, 2, [6, 22], 1e-3, ordering="pw")


@pytest.fixture(scope="module")
def integer_lattice():
    return LatticeDesign(family=NestedCodeFamily(n=16, info_sets=()),
                         sigma2_a=0.02, target_wer=1e-3)


class TestTransmitPoint:
    def test_zero_mode(self, small_design):
        point, u_full, z = transmit_point(small_design, "zero", seed=1)
        assert not point.x.any()
        assert not z.any()
        assert all(not u.any() for u in u_full)

    def test_random_mode_reproducible(self, small_design):
        p1, _, _ = transmit_point(small_design, "random", seed=5)
        p2, _, _ = transmit_point(small_design, "random", seed=5)
        p3, _, _ = transmit_point(small_design, "random", seed=6)
        assert np.array_equal(p1.x, p2.x)
        assert not np.array_equal(p1.x, p3.x)

    def test_random_mode_crc_valid(self):
        design = make_design(32, 2, [10, 22], 1e-3, decoder="scl",
                             crc_bits=6, list_size=4, ordering="pw")
        _, u_full, _ = transmit_point(design, "random", seed=2)
        for i, u in enumerate(u_full):
            code = design.level_code(i)
            msg = np.concatenate([u[code.payload_positions], u[code.crc_positions]])
            assert crc_check(msg, 6)

    def test_unknown_mode(self, small_design):
        with pytest.raises(ValueError):
            transmit_point(small_design, "other", seed=0)


class TestRunWer:
    def test_tiny_noise_no_errors(self, small_design):
        plan = SimPlan(design=small_design, sweep=(1e-4,), sweep_unit="sigma2",
                       max_trials=1000, target_errors=50, seed=0)
        stats = run_wer(plan)[0]
        assert stats.errors == 0
        assert stats.trials == 1000

    def test_stop_rule(self, small_design):
        s2 = sigma2_for_vnr(small_design, -1.0)  # heavy noise, frequent errors
        plan = SimPlan(design=small_design, sweep=(s2,), sweep_unit="sigma2",
                       max_trials=50_000, target_errors=30, seed=0, batch_size=100)
        stats = run_wer(plan)[0]
        assert stats.errors >= 30
        assert stats.trials < 50_000

    def test_level_attribution_sums(self, small_design):
        plan = SimPlan(design=small_design, sweep=(1.0, 2.0), sweep_unit="vnr_db",
                       max_trials=3000, target_errors=10_000, seed=1)
        for stats in run_wer(plan):
            assert sum(stats.level_errors) == stats.errors
            assert len(stats.level_errors) == small_design.a + 1

    def test_worker_determinism(self, small_design):
        plan = dict(design=small_design, sweep=(1.5,), sweep_unit="vnr_db",
                    max_trials=2000, target_errors=10_000, seed=7, batch_size=250)
        seq = run_wer(SimPlan(**plan, workers=1))
        par = run_wer(SimPlan(**plan, workers=8))
        assert seq[0].errors == par[0].errors
        assert seq[0].level_errors == par[0].level_errors
        assert seq[0].trials == par[0].trials

    def test_zero_vs_random_transmit_agree(self, small_design):
        s2 = sigma2_for_vnr(small_design, 1.0)
        base = dict(design=small_design, sweep=(s2,), sweep_unit="sigma2",
                    max_trials=20_000, target_errors=10_000, seed=3)
        wer_zero = run_wer(SimPlan(**base, transmit_mode="zero"))[0]
        wer_rand = run_wer(SimPlan(**base, transmit_mode="random"))[0]
        lo0, hi0 = wer_zero.ci95
        lo1, hi1 = wer_rand.ci95
        assert max(lo0, lo1) <= min(hi0, hi1)  # intervals overlap

    def test_uncoded_lattice_matches_closed_form(self, integer_lattice):
        n = integer_lattice.n
        for s2 in (0.02, 0.03):
            plan = SimPlan(design=integer_lattice, sweep=(s2,), sweep_unit="sigma2",
                           max_trials=40_000, target_errors=10_000_000, seed=11)
            stats = run_wer(plan)[0]
            lo, hi = stats.ci95
            assert lo <= uncoded_wer(s2, n) <= hi

    def test_validation(self, small_design):
        with pytest.raises(ValueError):
            SimPlan(design=small_design, sweep=(), max_trials=10)
        with pytest.raises(ValueError):
            SimPlan(design=small_design, sweep=(1.0,), sweep_unit="db")


class TestCsv:
    def test_schema_and_determinism(self, small_design):
        plan = SimPlan(design=small_design, sweep=(1.0, 2.0), sweep_unit="vnr_db",
                       max_trials=500, target_errors=10_000, seed=2)
        text1 = stats_to_csv(run_wer(plan))
        text2 = stats_to_csv(run_wer(SimPlan(design=small_design, sweep=(1.0, 2.0),
                                             sweep_unit="vnr_db", max_trials=500,
                                             target_errors=10_000, seed=2, workers=4)))
        assert text1 == text2
        header = text1.splitlines()[0]
        assert header == "vnr_db,sigma2,trials,errors,wer,ci_low,ci_high,err_l0,err_l1,err_top,seconds"
        assert all(line.endswith(",0.0") for line in text1.splitlines()[1:])

    def test_timing_column_opt_in(self, small_design):
        plan = SimPlan(design=small_design, sweep=(2.0,), sweep_unit="vnr_db",
                       max_trials=200, target_errors=10, seed=2)
        stats = run_wer(plan)
        timed = stats_to_csv(stats, timing=True)
        assert not timed.splitlines()[1].endswith(",0.0")

    def test_wilson_interval_sane(self):
        s = SimStats(vnr_db=1.0, sigma2=0.1, trials=1000, errors=10,
                     level_errors=(10,), seconds=0.0)
        lo, hi = s.ci95
        assert 0 < lo < 0.01 < hi < 0.02
        zero = SimStats(vnr_db=1.0, sigma2=0.1, trials=1000, errors=0,
                        level_errors=(0,), seconds=0.0)
        lo, hi = zero.ci95
        assert lo == 0.0 and hi < 0.005
