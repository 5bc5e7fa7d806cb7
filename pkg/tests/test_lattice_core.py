from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eulerhydro.errors import ConfigurationError, OutOfWindowError, RejectedJumpError
from eulerhydro.lattice_core import (
    LatticeConfig,
    RateModel,
    apply_jump,
    generator_apply,
    get_model,
    load_model,
    mean_drift,
    microscopic_flux,
    validate_model,
)


def all_configs(L, K):
    for s in itertools.product(range(K + 1), repeat=L):
        yield LatticeConfig.ring(np.array(s))


def flux_by_enumeration(config, model, x):
    """Rightward minus leftward rates over every (source, target) pair straddling the bond (x, x+1)."""
    L = config.L
    total = 0.0
    for u in range(x - model.M, x + model.M + 2):
        for z in model.offsets:
            v = u + z
            crosses_right = u <= x < v
            crosses_left = v <= x < u
            if not (crosses_right or crosses_left):
                continue
            r = model.rate(z, int(config.sites[u % L]), int(config.sites[v % L]))
            total += r if crosses_right else -r
    return total


class TestValidation:
    def test_tasep_passes(self):
        assert validate_model(get_model("tasep")).ok

    def test_even_kernel_fails_irreducibility(self):
        m = RateModel.decoupled(1, {2: 1.0}, np.array([[0, 0], [1, 0]]))
        rep = validate_model(m)
        assert rep.failed() == {"A1"}
        assert rep.violations[0].witness == (2,)

    def test_full_receiver_rate_fails(self):
        m = RateModel.decoupled(1, {1: 1.0}, np.array([[0, 0], [1, 1]]))
        assert "A3" in validate_model(m).failed()

    def test_monotonicity_witness(self):
        b = np.array([[0, 0, 0], [1, 1, 0], [0.5, 0.5, 0]])
        rep = validate_model(RateModel.decoupled(2, {1: 1.0}, b))
        a4 = [v for v in rep.violations if v.assumption == "A4"]
        assert a4 and a4[0].witness[:2] == (1, 1)[:2]

    def test_kernel_not_normalised(self):
        m = RateModel.decoupled(1, {1: 0.5}, np.array([[0, 0], [1, 0]]))
        assert "A2" in validate_model(m).failed()

    def test_registry_models_valid(self):
        for name in ("tasep", "ssep", "asep", "tasep-range2"):
            assert validate_model(get_model(name)).ok, name
        assert validate_model(get_model("k-exclusion", K=3)).ok

    def test_unknown_model(self):
        with pytest.raises(ConfigurationError):
            get_model("nope")


def test_mean_drift():
    assert mean_drift(get_model("tasep")) == 1
    assert mean_drift(get_model("ssep")) == 0
    assert mean_drift(get_model("asep", p=2 / 3)) == pytest.approx(1 / 3)


class TestApplyJump:
    def test_moves_particle(self):
        c = LatticeConfig.ring([1, 0, 0])
        assert list(apply_jump(c, 0, 1, 1).sites) == [0, 1, 0]

    def test_empty_donor(self):
        with pytest.raises(RejectedJumpError) as e:
            apply_jump(LatticeConfig.ring([0, 0, 0]), 0, 1, 1)
        assert e.value.site == 0

    def test_full_receiver(self):
        with pytest.raises(RejectedJumpError) as e:
            apply_jump(LatticeConfig.ring([1, 1, 0]), 0, 1, 1)
        assert e.value.site == 1

    def test_segment_reservoirs_frozen(self):
        c = LatticeConfig.segment([0, 1], left=1, right=0)
        assert list(apply_jump(c, -1, 0, 1).sites) == [1, 1]
        assert list(apply_jump(c, 1, 2, 1).sites) == [0, 0]

    @given(st.lists(st.integers(0, 2), min_size=5, max_size=12), st.data())
    def test_mass_preserved_on_ring(self, sites, data):
        c = LatticeConfig.ring(sites)
        x = data.draw(st.integers(0, len(sites) - 1))
        y = (x + data.draw(st.sampled_from([-1, 1, 2]))) % len(sites)
        if c.sites[x] < 1 or c.sites[y] > 1:
            return
        assert apply_jump(c, x, y, 2).mass() == c.mass()


class TestMicroscopicFlux:
    def test_tasep_single(self):
        c = LatticeConfig.ring([1, 0, 0, 0])
        assert microscopic_flux(c, get_model("tasep"), 0) == 1

    def test_full_is_zero(self):
        m = get_model("k-exclusion", K=2)
        assert microscopic_flux(LatticeConfig.ring([2] * 5), m, 2) == 0

    def test_ssep_half(self):
        # enumeration oracle: only the rightward jump 0 -> 1 has positive rate, weight 1/2
        c = LatticeConfig.ring([1, 0, 0, 0])
        m = get_model("ssep")
        assert flux_by_enumeration(c, m, 0) == 0.5
        assert microscopic_flux(c, m, 0) == 0.5

    def test_segment_window(self):
        m = get_model("tasep-range2")
        with pytest.raises(OutOfWindowError):
            microscopic_flux(LatticeConfig.segment([1, 0, 1]), m, 0)

    @pytest.mark.parametrize("name", ["tasep-range2", "asep", "ssep"])
    def test_matches_enumeration(self, name):
        m = get_model(name)
        for c in all_configs(6, 1):
            for x in range(6):
                assert microscopic_flux(c, m, x) == pytest.approx(flux_by_enumeration(c, m, x), abs=1e-15)

    @given(st.lists(st.integers(0, 2), min_size=7, max_size=10), st.data())
    def test_lipschitz_in_one_site(self, sites, data):
        m = get_model("k-exclusion", K=2, kernel={1: 0.5, -1: 0.25, 2: 0.25})
        c = LatticeConfig.ring(sites)
        i = data.draw(st.integers(0, len(sites) - 1))
        new = np.array(sites)
        new[i] = data.draw(st.integers(0, 2))
        d = microscopic_flux(c, m, 3) - microscopic_flux(c.with_sites(new), m, 3)
        C = (2 * m.M + 1) * m.max_rate
        assert abs(d) <= C * abs(int(new[i]) - sites[i]) + 1e-12


class TestGenerator:
    def test_constant_observable(self):
        m = get_model("tasep")
        assert generator_apply(lambda s: 3.0, LatticeConfig.ring([1, 0, 1, 0]), m) == 0

    def test_empty_is_frozen(self):
        assert generator_apply(lambda s: float(s[0]), LatticeConfig.ring([0] * 5), get_model("tasep")) == 0

    @pytest.mark.parametrize("name,K,L", [("tasep", 1, 8), ("k-exclusion", 2, 6), ("tasep-range2", 1, 7)])
    def test_interval_mass_identity(self, name, K, L):
        m = get_model(name, K=K) if name == "k-exclusion" else get_model(name)
        for c in all_configs(L, K):
            for x, y in [(0, 3), (2, 5), (1, 2)]:
                lhs = generator_apply(lambda s, x=x, y=y: float(s[x + 1:y + 1].sum()), c, m)
                rhs = microscopic_flux(c, m, x) - microscopic_flux(c, m, y)
                assert lhs == rhs

    def test_total_mass_conserved(self):
        m = get_model("k-exclusion", K=2, kernel={1: 0.7, -1: 0.3})
        for c in all_configs(5, 2):
            assert generator_apply(lambda s: float(s.sum()), c, m) == 0


def test_config_invariants():
    with pytest.raises(ConfigurationError):
        LatticeConfig.ring([2, 0, 0]).check(get_model("tasep"))
    with pytest.raises(ConfigurationError):
        LatticeConfig.ring([1, 0]).check(get_model("tasep-range2"))
    with pytest.raises(ConfigurationError):
        LatticeConfig.ring([-1, 0, 0])


def test_model_file_roundtrip(tmp_path):
    m = get_model("k-exclusion", K=2, kernel={1: 0.75, -1: 0.25})
    p = tmp_path / "model.json"
    p.write_text(json.dumps(m.to_dict()))
    back = load_model(p)
    assert back.K == 2 and back.offsets == m.offsets
    assert np.array_equal(back.rate_table, m.rate_table)
    assert get_model("misanthrope-custom", path=str(p)).offsets == m.offsets
