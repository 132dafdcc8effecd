import numpy as np
import pytest

from polarlattice.channels import (AmgnLevel, AwgnChannel, awgn_sample,
                                   llr_from_amgn, mod_star, replica_radius)


class TestAwgnSample:
    def test_rejects_zero_variance(self):
        with pytest.raises(ValueError):
            awgn_sample(np.zeros(4), 0.0, seed=1)

    def test_deterministic_given_seed(self):
        x = np.linspace(-3, 3, 50)
        a = awgn_sample(x, 0.3, seed=42, stream=7)
        b = awgn_sample(x, 0.3, seed=42, stream=7)
        assert np.array_equal(a, b)
        c = awgn_sample(x, 0.3, seed=42, stream=8)
        assert not np.array_equal(a, c)

    def test_moments(self):
        noise = awgn_sample(np.zeros(1_000_000), 0.7, seed=5)
        sigma = np.sqrt(0.7)
        assert abs(noise.mean()) < 4 * sigma / 1e3
        assert abs(noise.var() - 0.7) < 0.01 * 0.7

    def test_channel_object(self):
        ch = AwgnChannel(sigma2=0.25, seed=9)
        assert np.array_equal(ch.sample(np.ones(8), stream=1),
                              awgn_sample(np.ones(8), 0.25, 9, 1))


class TestModStar:
    @pytest.mark.parametrize("y,expected", [
        (0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (1.7, 0.3), (-0.3, 0.3), (0.5, 0.5),
    ])
    def test_values(self, y, expected):
        assert mod_star(y) == pytest.approx(expected, abs=1e-12)

    def test_period_and_symmetry(self):
        rng = np.random.default_rng(1)
        y = rng.uniform(-100, 100, size=100_000)
        out = mod_star(y)
        assert np.all((out >= 0) & (out <= 1))
        assert np.allclose(mod_star(y + 2.0), out, atol=1e-10)
        assert np.allclose(mod_star(-y), out, atol=1e-12)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            mod_star(np.array([0.1, np.inf]))


class TestLlrFromAmgn:
    def test_midpoint_is_zero(self):
        assert llr_from_amgn(0.5, 0.2) == 0.0

    def test_nearest_replica_limit(self):
        # at y=0 and small noise the nearest replicas dominate: one even at
        # distance 0, two odd at distance 1, giving 1/(2 sigma2) - ln 2
        sigma2 = 0.01
        expected = 1 / (2 * sigma2) - np.log(2.0)
        assert llr_from_amgn(0.0, sigma2) == pytest.approx(expected, rel=1e-9)
        # dominant-term magnitude check against the two-term oracle
        assert llr_from_amgn(0.0, sigma2) == pytest.approx(1 / (2 * sigma2), abs=0.7)

    def test_signs(self):
        assert llr_from_amgn(0.0, 0.3) > 0
        assert llr_from_amgn(1.0, 0.3) < 0

    def test_antisymmetry(self):
        rng = np.random.default_rng(2)
        y = rng.uniform(0, 1, size=1000)
        for s2 in (0.05, 0.4, 2.0):
            assert np.allclose(llr_from_amgn(y, s2), -llr_from_amgn(1 - y, s2), atol=1e-12)

    def test_monotone_nonincreasing(self):
        y = np.linspace(0, 1, 2001)
        for s2 in (0.01, 0.15, 1.0, 25.0):
            llr = llr_from_amgn(y, s2)
            assert np.all(np.diff(llr) <= 1e-12)

    def test_truncation_self_consistency(self, monkeypatch):
        # one extra replica on each side moves the LLR by < 1e-10
        import polarlattice.channels as ch
        y = np.linspace(0, 1, 101)
        for s2 in (0.05, 0.5, 4.0):
            base = llr_from_amgn(y, s2)
            r = replica_radius(s2)
            monkeypatch.setattr(ch, "replica_radius", lambda _s2: r + 1)
            wider = ch.llr_from_amgn(y, s2)
            monkeypatch.undo()
            assert np.max(np.abs(base - wider)) < 1e-10

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            llr_from_amgn(np.array([0.2, 1.2]), 0.1)

    def test_saturation(self):
        assert llr_from_amgn(0.0, 1e-4) == 70.0


class TestAmgnLevel:
    def test_variance_scaling_exact(self):
        for i in range(5):
            lvl = AmgnLevel(level=i, sigma2_0=0.3)
            assert lvl.sigma2 == 0.3 / 4.0 ** i
