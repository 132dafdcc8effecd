import numpy as np
import pytest

from polarlattice.decoders import SclConfig
from polarlattice.density import LlrGrid, amgn_llr_density, de_wer, evolve
from polarlattice.design import (RateQuery, achievable_rate, design_lattice,
                                 make_design, rate_curve,
                                 sigma2_for_uncoded_target,
                                 uncoded_dimension_error, uncoded_wer)

GRID = LlrGrid(llr_max=60.0, step=0.01)
TARGET = 1e-4 / 3


class TestUncodedLevel:
    def test_table_values(self):
        # dB values of 1/sigma2_a for n = 64..1024 at the standard target
        expected = {64: 20.03, 128: 20.26, 256: 20.47, 512: 20.68, 1024: 20.87}
        for n, db in expected.items():
            s2 = sigma2_for_uncoded_target(n, TARGET)
            assert 10 * np.log10(1 / s2) == pytest.approx(db, abs=0.01)

    def test_known_variance(self):
        assert sigma2_for_uncoded_target(128, TARGET) == pytest.approx(0.0094258, abs=5e-8)

    def test_round_trip(self):
        for n in (1, 64, 128, 1024):
            for target in (1e-6, TARGET, 1e-2, 0.3):
                s2 = sigma2_for_uncoded_target(n, target)
                assert uncoded_wer(s2, n) == pytest.approx(target, rel=1e-9)

    def test_monotone_in_n(self):
        values = [sigma2_for_uncoded_target(n, TARGET) for n in (2, 8, 64, 512)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_domain_validation(self):
        with pytest.raises(ValueError):
            sigma2_for_uncoded_target(0, 0.1)
        with pytest.raises(ValueError):
            sigma2_for_uncoded_target(8, 1.5)

    def test_dimension_error_form(self):
        from scipy.special import erfc
        s2 = 0.04
        assert uncoded_dimension_error(s2) == erfc(1 / (2 * np.sqrt(2 * s2)))


@pytest.fixture(scope="module")
def rel64():
    """Reliabilities for n=64 at one mid-range noise point."""
    sigma2 = 0.08
    return sigma2, evolve(amgn_llr_density(sigma2, GRID), 64)


class TestAchievableRate:
    def test_matches_linear_scan(self, rel64):
        sigma2, rel = rel64
        res = achievable_rate(RateQuery(n=64, target=1e-3, sigma2=sigma2))
        # exhaustive scan over k with the same ordering
        order = np.argsort(rel.p, kind="stable")
        best = 0
        for k in range(65):
            if de_wer(rel, order[:k]) <= 1e-3:
                best = k
        assert res.k == best
        assert res.predicted_wer <= 1e-3
        assert res.rate == res.k / 64

    def test_useless_channel(self):
        res = achievable_rate(RateQuery(n=16, target=1e-3, sigma2=1e4))
        assert res.k == 0

    def test_monotone_in_noise(self):
        ks = []
        for s2 in np.linspace(0.03, 0.3, 10):
            ks.append(achievable_rate(RateQuery(n=64, target=1e-3, sigma2=s2)).k)
        assert all(a >= b for a, b in zip(ks, ks[1:]))

    def test_pw_ordering_never_beats_de(self, rel64):
        sigma2, _ = rel64
        de = achievable_rate(RateQuery(n=64, target=1e-3, sigma2=sigma2, ordering="de"))
        pw = achievable_rate(RateQuery(n=64, target=1e-3, sigma2=sigma2, ordering="pw"))
        assert pw.k <= de.k

    def test_validation(self):
        with pytest.raises(ValueError):
            RateQuery(n=16, target=0.0, sigma2=0.1)
        with pytest.raises(ValueError):
            RateQuery(n=16, target=0.5, sigma2=0.1, method="mc")  # needs SclConfig


class TestMonteCarloRate:
    def test_desk_scale_search(self):
        # n=16 list decoding at an easy target; exact answer from SC+DE as a
        # lower bound and sanity range
        cfg = SclConfig(list_size=4, crc_bits=6)
        query = RateQuery(n=16, target=0.02, sigma2=0.04, method="mc", ordering="pw",
                          scl=cfg, mc_min_errors=60, mc_max_trials=30_000, seed=3)
        res = achievable_rate(query)
        assert res.feasible
        assert 6 < res.k <= 16
        # measured error rate at the chosen size respects the target within
        # Monte Carlo resolution
        assert res.predicted_wer <= 0.02 * 1.6

    def test_infeasible_flag(self):
        cfg = SclConfig(list_size=2, crc_bits=6)
        query = RateQuery(n=8, target=1e-4, sigma2=5.0, method="mc", ordering="pw",
                          scl=cfg, mc_min_errors=30, mc_max_trials=4_000, seed=1)
        res = achievable_rate(query)
        assert not res.feasible
        assert res.k == 0


class TestDesignLattice:
    def test_structure_smoke(self):
        design = design_lattice(32, 2, 1e-2)
        assert design.a == 2
        assert design.k_values[0] <= design.k_values[1]
        k0, k1 = design.k_values
        assert set(design.family.info_sets[0].tolist()) <= set(
            design.family.info_sets[1].tolist())
        # per-level budget respected
        assert all(w <= 1e-2 / 3 for w in design.level_predicted_wer)
        assert sum(design.level_predicted_wer) <= 1e-2

    def test_single_level_degenerate(self):
        design = design_lattice(2, 1, 0.5)
        assert design.a == 1
        assert design.k_values[0] <= 2

    def test_validation(self):
        with pytest.raises(ValueError, match="power of two"):
            design_lattice(100, 2, 1e-4)
        with pytest.raises(ValueError):
            design_lattice(16, 0, 1e-4)
        with pytest.raises(ValueError):
            design_lattice(16, 2, 0.0)

    def test_make_design_nesting_and_rankings(self):
        design = make_design(64, 2, [10, 40], 1e-3, decoder="scl",
                             crc_bits=6, list_size=8, ordering="pw")
        assert design.k_values == (10, 40)
        assert set(design.family.info_sets[0].tolist()) <= set(
            design.family.info_sets[1].tolist())
        code = design.level_code(0)
        assert code.crc_bits == 6
        assert code.k == 10

    def test_make_design_de_ordering(self):
        design = make_design(16, 2, [3, 9], 1e-2, ordering="de",
                             grid=LlrGrid(30.0, 0.01))
        assert design.k_values == (3, 9)
        assert set(design.family.info_sets[0].tolist()) <= set(
            design.family.info_sets[1].tolist())


class TestRateCurve:
    def test_monotone_and_csv(self, tmp_path):
        grid = [0.05, 0.08, 0.12, 0.2, 0.35]
        curve = rate_curve(64, 1e-3, grid)
        ks = [p[1] for p in curve.points]
        assert all(a >= b for a, b in zip(ks, ks[1:]))
        path = tmp_path / "curve.csv"
        curve.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "sigma2,inv_sigma2_db,k,rate,predicted_wer"
        assert len(lines) == 6
        first = lines[1].split(",")
        assert float(first[0]) == 0.05
        assert float(first[1]) == pytest.approx(10 * np.log10(1 / 0.05))

    def test_identical_points_identical_rates(self):
        curve = rate_curve(16, 1e-2, [0.1, 0.1])
        assert curve.points[0][1:] == curve.points[1][1:]

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            rate_curve(16, 1e-2, [])

    def test_unsorted_grid_rejected(self):
        with pytest.raises(ValueError, match="ascending"):
            rate_curve(16, 1e-2, [0.2, 0.1])
