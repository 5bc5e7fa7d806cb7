from __future__ import annotations

import warnings

import numpy as np
import pytest

from eulerhydro.equilibrium import FluxTable
from eulerhydro.errors import ConfigurationError, DomainError
from eulerhydro.experiments import (
    ExperimentReport,
    RiemannData,
    Verdict,
    coupled_sample,
    hydro_experiment,
    propagation_experiment,
    required_margin,
    riemann_local_equilibrium,
    sample_configuration,
    stability_experiment,
)
from eulerhydro.lattice_core import LatticeConfig, get_model
from eulerhydro.metrics import delta_config_profile
from eulerhydro.profiles import steps

TASEP = get_model("tasep")


class TestSampling:
    def test_empty_and_full(self):
        assert sample_configuration(lambda x: np.zeros_like(x), 50, 1, 0, (-1, 1)).mass() == 0
        c = sample_configuration(lambda x: np.full_like(x, 2.0), 50, 2, 0, (-1, 1))
        assert np.all(c.sites == 2) and c.origin == -50

    def test_domain(self):
        with pytest.raises(DomainError):
            sample_configuration(lambda x: np.full_like(x, 1.5), 50, 1, 0, (0, 1))

    def test_constant_profile_rate(self):
        rho = 0.4
        u = steps([-1, 1], [rho])
        meds = []
        for N in (100, 400, 1600):
            d = [delta_config_profile(sample_configuration(u, N, 1, s), u, N) for s in range(100)]
            meds.append(float(np.median(d)))
        # Delta^N of an i.i.d. sample is a random-walk maximum: O(N^{-1/2})
        assert meds[0] > meds[1] > meds[2]
        ratio = np.array(meds) * np.sqrt([100, 400, 1600])
        assert ratio.max() / ratio.min() < 2

    def test_shared_sampling_ordered(self):
        u = steps([-1, 0, 1], [0.3, 0.5])
        v = steps([-1, 1], [0.6])
        a, b = coupled_sample(u, v, 200, 1, 3, (-1, 1))
        assert np.all(a.sites <= b.sites)


class TestReport:
    def test_verdict(self):
        assert Verdict("x", 0.1, "<=", 0.2).passed
        assert not Verdict("x", 0.3, "<=", 0.2).passed

    def test_roundtrip(self, tmp_path):
        rep = ExperimentReport("demo", {"N": np.int64(5)}, {"v": np.arange(3.0)},
                               [Verdict("a", 1.0, ">=", 0.5), Verdict("b", 2.0, "<", 1.0)], notes=["n"])
        path = tmp_path / "r.json"
        rep.to_json(path)
        back = ExperimentReport.from_json(path)
        assert [v.passed for v in back.verdicts] == [True, False]
        assert back.to_dict() == rep.to_dict()
        assert ExperimentReport.from_json(rep.to_json()).verdict("a").threshold == 0.5


class TestHydro:
    def test_margin_check(self):
        with pytest.raises(ConfigurationError, match="sites"):
            hydro_experiment(TASEP, RiemannData(0.8, 0.2), 100, 1.0, "quadratic", seeds=[0], margin=0.5)

    def test_constant_profile(self):
        rep = hydro_experiment(TASEP, RiemannData(0.3, 0.3), 400, 0.5, "quadratic", seeds=range(3),
                               interval=(-1, 1), tolerance=0.06)
        assert np.allclose(rep.measurements["reference_bins"], 0.3)
        assert rep.passed

    def test_riemann_small(self):
        rep = hydro_experiment(TASEP, RiemannData(0.8, 0.2), 500, 1.0, "quadratic", seeds=range(4))
        assert rep.params["reference"] == "riemann"
        assert rep.measurements["median_l1_error"] <= 0.1
        again = hydro_experiment(TASEP, RiemannData(0.8, 0.2), 500, 1.0, "quadratic", seeds=range(4))
        assert again.measurements["l1_error"] == rep.measurements["l1_error"]

    def test_two_exclusion_glimm(self):
        m = get_model("k-exclusion", K=2)
        d = np.linspace(0, 2, 9)
        # a concave stand-in table respecting F <= G <= H for 2-exclusion
        table = FluxTable.from_values(2, d, np.minimum(d * (2 - d) / 2.5, 0.4) * (d > 0) * (d < 2))
        u0 = steps([-0.5, 0.0], [2.0])
        rep = hydro_experiment(m, u0, 300, 0.5, table, seeds=range(2), interval=(-1.5, 1.5),
                               reference="glimm", tolerance=0.3)
        assert rep.params["reference"] == "glimm" and rep.passed


class TestLocalEquilibrium:
    def test_rays_outside_fan(self):
        rep = riemann_local_equilibrium(TASEP, 0.7, 0.3, "quadratic", 400, 1.0, [-1.5, 1.5], 20, seeds=range(3),
                                        tolerance=0.1)
        assert rep.measurements["target"] == [0.7, 0.3]
        assert rep.passed

    def test_shock_ray_warns(self):
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            rep = riemann_local_equilibrium(TASEP, 0.2, 0.8, "quadratic", 200, 0.5, [0.0], 10, seeds=[0])
        assert any("shock" in str(x.message) for x in w)
        assert rep.notes


class TestStability:
    def test_identical(self):
        u = steps([-0.5, 0.5], [0.5])
        rep = stability_experiment(TASEP, u, u, 200, 0.2, seeds=range(3), sampling="shared")
        assert rep.measurements["excess"] == [0.0, 0.0, 0.0]

    def test_nearest_neighbour_nonpositive(self):
        u = steps([-0.5, 0.0], [0.5])
        v = steps([-0.25, 0.25], [0.5])
        rep = stability_experiment(TASEP, u, v, 300, 0.2, seeds=range(5))
        assert max(rep.measurements["excess"]) <= 0

    def test_bad_sampling(self):
        u = steps([-0.5, 0.5], [0.5])
        with pytest.raises(ConfigurationError):
            stability_experiment(TASEP, u, u, 100, 0.1, sampling="other")


class TestPropagation:
    def _pair(self):
        rng = np.random.default_rng(0)
        a = rng.integers(0, 2, 400)
        b = a.copy()
        b[:50] = 1 - b[:50]
        b[350:] = 1 - b[350:]
        return LatticeConfig.segment(a), LatticeConfig.segment(b)

    def test_identical(self):
        a, _ = self._pair()
        rep = propagation_experiment(TASEP, a, a, (50, 349), 20.0, seeds=range(10))
        assert rep.measurements["agreement_fraction"] == 1.0 and rep.passed

    def test_outside_disagreement(self):
        a, b = self._pair()
        rep = propagation_experiment(TASEP, a, b, (50, 349), 20.0, seeds=range(100))
        assert rep.measurements["agreement_fraction"] == 1.0
        assert rep.measurements["fitted_C"] is None

    def test_window(self):
        a, b = self._pair()
        with pytest.raises(DomainError):
            propagation_experiment(TASEP, a, b, (50, 349), 200.0)

    def test_differs_inside(self):
        a, b = self._pair()
        with pytest.raises(ConfigurationError):
            propagation_experiment(TASEP, a, b, (10, 349), 5.0)

    def test_margin(self):
        assert required_margin(get_model("tasep-range2"), 1.0) == 2.0
