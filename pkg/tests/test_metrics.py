from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eulerhydro.errors import ConfigurationError, DomainError
from eulerhydro.lattice_core import LatticeConfig
from eulerhydro.metrics import (
    block_average,
    config_embedding,
    delta_config_profile,
    delta_configs,
    delta_profiles,
    delta_steps,
    empirical_density_field,
    empirical_profile,
    l1_distance,
    total_variation,
)
from eulerhydro.profiles import steps


def step_data(draw, n_max=6):
    n = draw(st.integers(1, n_max))
    b = sorted(draw(st.lists(st.fractions(-5, 5, max_denominator=8), min_size=n + 1, max_size=n + 1, unique=True)))
    v = draw(st.lists(st.fractions(0, 2, max_denominator=4), min_size=n, max_size=n))
    return b, v


steps_st = st.composite(step_data)


def trapezoid_delta(u, v, h=1e-4):
    lo = min(u.breakpoints[0], v.breakpoints[0]) - 1
    hi = max(u.breakpoints[-1], v.breakpoints[-1]) + 1
    x = np.arange(lo, hi + h, h)
    d = u(x) - v(x)
    prim = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * h)])
    return float(np.abs(prim).max())


class TestDeltaProfiles:
    def test_self(self):
        u = steps([0, 1, 3], [0.5, 1.0])
        assert delta_profiles(u, u) == 0

    def test_shifted_indicator(self):
        assert delta_profiles(steps([0, 1], [1.0]), steps([1, 2], [1.0])) == 1

    def test_callable_rejected(self):
        with pytest.raises(DomainError):
            delta_profiles(lambda x: x, steps([0, 1], [1.0]))

    def test_against_trapezoid(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            bu = np.sort(rng.uniform(-2, 2, 6))
            bv = np.sort(rng.uniform(-2, 2, 5))
            u = steps(bu, rng.uniform(0, 1, 5))
            v = steps(bv, rng.uniform(0, 1, 4))
            assert abs(delta_profiles(u, v) - trapezoid_delta(u, v)) <= 1e-3

    @given(steps_st(), steps_st(), steps_st())
    def test_pseudometric_exact(self, a, b, c):
        ab = delta_steps(*a, *b)
        ba = delta_steps(*b, *a)
        bc = delta_steps(*b, *c)
        ac = delta_steps(*a, *c)
        assert isinstance(ab, (Fraction, int))
        assert ab == ba
        assert ac <= ab + bc


class TestDeltaConfigs:
    def test_equal(self):
        assert delta_configs([1, 0, 1], [1, 0, 1], 10) == 0

    def test_extra_particle(self):
        assert delta_configs([1, 0, 1, 0], [1, 0, 0, 0], 10) == pytest.approx(0.1)

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            delta_configs([1, 0], [1, 0, 0], 5)

    @given(st.lists(st.integers(0, 3), min_size=1, max_size=40), st.data(), st.sampled_from([1, 2, 4, 8]),
           st.integers(-20, 20))
    def test_matches_embedding(self, a, data, N, origin):
        b = data.draw(st.lists(st.integers(0, 3), min_size=len(a), max_size=len(a)))
        ea = LatticeConfig.segment(a, origin=origin)
        eb = LatticeConfig.segment(b, origin=origin)
        lhs = delta_configs(ea, eb, N)
        rhs = delta_profiles(config_embedding(ea, N), config_embedding(eb, N))
        assert lhs == rhs
        assert abs(sum(a) - sum(b)) / N <= lhs


class TestDeltaConfigProfile:
    def test_empty(self):
        assert delta_config_profile([0] * 10, steps([], []), 10) == 0

    def test_full_block(self):
        N, K = 50, 2
        eta = LatticeConfig.segment([K] * N)
        assert delta_config_profile(eta, steps([0, 1], [K]), N) <= K / N + 1e-12

    @pytest.mark.parametrize("N", [10, 100, 1000])
    def test_staircase_rounding(self, N):
        u = steps([-1, -0.3, 0.4, 1], [0.7, 0.25, 0.9])
        sites = np.arange(-N, N)
        # deterministic staircase: eta(y) = floor(N U((y+1)/N)) - floor(N U(y/N))
        U = lambda x: u.primitive(x)
        eta = np.diff(np.floor(N * U(np.concatenate([sites, [N]]) / N) + 1e-9)).astype(int)
        d = delta_config_profile(LatticeConfig.segment(eta, origin=-N), u, N)
        assert d <= 2.0 / N


class TestEmpirical:
    def test_full(self):
        p = empirical_profile(LatticeConfig.ring([2] * 30), 10, 3)
        assert np.all(p.values == 2) and p.sites[0] == 3 and p.sites.size == 24

    def test_concentration(self):
        rng = np.random.default_rng(8)
        K, rho, l = 2, 0.8, 50
        sites = rng.binomial(K, rho / K, 20_000)
        p = empirical_profile(LatticeConfig.ring(sites), 1000, l)
        bound = 4 * np.sqrt(rho * (K - rho)) / np.sqrt(2 * l + 1)
        assert np.mean(np.abs(p.values - rho) <= bound) >= 0.99

    def test_block_average(self):
        c = LatticeConfig.segment([0, 1, 2, 1, 0], origin=10)
        assert block_average(c, 12, 1) == pytest.approx(4 / 3)
        with pytest.raises(ConfigurationError):
            block_average(c, 10, 1)

    @given(st.lists(st.integers(0, 3), min_size=1, max_size=60), st.integers(-30, 30),
           st.sampled_from([0.25, 0.5, 1.0]))
    def test_mass_consistency(self, sites, origin, width):
        c = LatticeConfig.segment(sites, origin=origin)
        f = empirical_density_field(c, 8, width)
        assert f.counts.sum() == sum(sites)
        assert f.mass.sum() == sum(sites) / 8

    def test_field_interval_and_csv(self, tmp_path):
        c = LatticeConfig.segment([1] * 40, origin=-20)
        f = empirical_density_field(c, 10, 0.5, interval=(-1.0, 1.0))
        assert np.allclose(f.density, 1.0)
        lines = f.to_csv(tmp_path / "f.csv").read_text().splitlines()
        assert lines[0] == "bin_center,density" and len(lines) == 5
        with pytest.raises(ConfigurationError):
            empirical_density_field(c, 10, 0.3, interval=(-1.0, 1.0))


class TestVariation:
    def test_staircase(self):
        u = steps([0, 1, 2, 3, 100], [1.0, 2.0, 3.0, 3.0 + 1e-300])
        assert total_variation(steps([0, 1, 2, 3], [1.0, 2.0, 3.0]), (-0.5, 3.0)) == 3
        assert total_variation(u) >= 6

    def test_indicator(self):
        assert total_variation(steps([0, 1], [1.0]), (-1, 2)) == 2

    def test_l1(self):
        u = steps([0, 1], [1.0])
        assert l1_distance(u, u, (-1, 2)) == 0
        assert l1_distance(u, steps([0.5, 1.5], [1.0]), (-1, 2)) == 1.0
        assert l1_distance(u, lambda x: np.zeros_like(x), (-1, 2)) == pytest.approx(1.0, abs=1e-5)
