import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sismob as sm
from sismob.dynamics import SystemState
from sismob.equilibria import apply_infection_map

from conftest import random_spec


class TestClassify:
    def test_scalar_instance(self, scalar_spec):
        report = sm.classify(scalar_spec)
        assert report.mu == pytest.approx(0.2, abs=1e-12)
        assert report.R0 == pytest.approx(3.0, abs=1e-10)
        assert report.classification == "DFE_unstable_EE_exists"
        assert report.p_star[0] == pytest.approx(2.0 / 3.0, abs=1e-10)

    def test_strong_recovery_everywhere_is_stable(self):
        layer = sm.preset_layer("ring", 5, 0.3)
        net = sm.MultiLayerNetwork(layers=(layer,), N=np.array([100.0]))
        spec = sm.ModelSpec(net=net, beta=np.full(5, 0.2), delta=np.full(5, 0.25))
        report = sm.classify(spec)
        assert report.conditions.suf_all
        assert report.mu <= 0
        assert report.classification == "DFE_stable"
        assert report.p_star is None

    def test_no_recovery_anywhere(self):
        layer = sm.preset_layer("line", 3, 0.2)
        net = sm.MultiLayerNetwork(layers=(layer,), N=np.array([60.0]))
        spec = sm.ModelSpec(net=net, beta=np.full(3, 0.3), delta=np.zeros(3))
        report = sm.classify(spec)
        assert report.R0 is None
        assert report.mu > 0
        assert np.all(report.p_star == 1.0)

    def test_sign_agreement_mu_r0(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            spec = random_spec(rng)
            report = sm.classify(spec)
            if abs(report.mu) <= 1e-8:
                continue
            assert (report.mu > 0) == (report.R0 > 1.0), (report.mu, report.R0)

    def test_report_serializes(self, two_node_spec):
        doc = sm.classify(two_node_spec).to_dict()
        assert set(doc) == {"v", "mu", "R0", "classification", "marginal",
                            "p_star", "conditions"}
        assert isinstance(doc["conditions"]["nec_per_node"], list)


class TestEndemicFixedPoint:
    def test_scalar_analytic(self, scalar_spec):
        p = sm.endemic_fixed_point(scalar_spec)
        assert p[0] == pytest.approx(2.0 / 3.0, abs=1e-10)

    def test_two_node_against_long_ode_run(self, two_node_spec):
        p_star = sm.endemic_fixed_point(two_node_spec)
        v = sm.network_stationary(two_node_spec.net).v
        initial = SystemState(t=0.0, p=np.full(2, 0.01), x=v)
        settled = sm.integrate_until_settled(two_node_spec, initial, dt=0.01,
                                             settle_tol=1e-11)
        assert np.max(np.abs(np.asarray(settled.p) - p_star)) <= 1e-6

    def test_needs_positive_recovery_somewhere(self):
        layer = sm.preset_layer("line", 3, 0.2)
        net = sm.MultiLayerNetwork(layers=(layer,), N=np.array([60.0]))
        spec = sm.ModelSpec(net=net, beta=np.full(3, 0.3), delta=np.zeros(3))
        with pytest.raises(ValueError):
            sm.endemic_fixed_point(spec)

    def test_subcritical_instance_is_a_precondition_violation(self):
        layer = sm.preset_layer("ring", 4, 0.2)
        net = sm.MultiLayerNetwork(layers=(layer,), N=np.array([80.0]))
        spec = sm.ModelSpec(net=net, beta=np.full(4, 0.2), delta=np.full(4, 0.3))
        with pytest.raises(ValueError, match="mu"):
            sm.endemic_fixed_point(spec)

    def test_monotone_iterates_from_one(self, two_node_spec):
        mats = sm.equilibrium_matrices(two_node_spec)
        p = np.ones(2)
        for _ in range(50):
            p_next = apply_infection_map(mats, p)
            assert np.all(p_next <= p + 1e-12)
            p = p_next

    def test_residual_at_fixed_point(self):
        rng = np.random.default_rng(23)
        checked = 0
        while checked < 10:
            spec = random_spec(rng)
            mats = sm.equilibrium_matrices(spec)
            if sm.spectral_abscissa(mats.G).mu <= 1e-3 or mats.A is None:
                continue
            p = sm.endemic_fixed_point(spec, mats)
            residual = np.max(np.abs(mats.G @ p - p * (mats.B @ (mats.F @ p))))
            assert residual <= 1e-8
            assert np.min(p) > 0
            checked += 1


class TestMonotoneMap:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**9))
    def test_order_preserving_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_spec(rng, n_max=6, m_max=3)
        mats = sm.equilibrium_matrices(spec)
        p1 = rng.uniform(0.0, 1.0, size=spec.nm)
        p2 = np.minimum(p1 + rng.uniform(0.0, 1.0, size=spec.nm), 1.0)
        h1, h2 = apply_infection_map(mats, p1), apply_infection_map(mats, p2)
        assert np.all(h1 <= h2 + 1e-12)
        assert np.all(apply_infection_map(mats, np.ones(spec.nm)) <= 1.0 + 1e-12)


class TestStabilityConditions:
    def test_complete_graph_lambda2_analytic(self):
        # complete-graph flow Laplacian with edge weight q has spectrum
        # {0, n q}; with n = 20, q = 0.2/19 the second eigenvalue is 4/19
        layer = sm.preset_layer("complete", 20, 0.2)
        net = sm.MultiLayerNetwork(layers=(layer,), N=np.array([20000.0]))
        spec = sm.ModelSpec(net=net, beta=np.full(20, 0.3), delta=np.full(20, 0.31))
        conditions = sm.stability_conditions(spec)
        assert conditions.lambda2 == pytest.approx(20 * 0.2 / 19, abs=1e-10)
        assert conditions.s_lower == pytest.approx(-(4 / 19) / 81, abs=1e-10)
        assert np.allclose(conditions.w, 1.0)

    def test_condition_hierarchy(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            spec = random_spec(rng)
            c = sm.stability_conditions(spec)
            if c.suf_all:
                assert c.nec_exists
                assert all(c.nec_per_node)

    def test_margin_construction_flags_not_applicable_when_uniform(self):
        # equal deficit at every node: the bound's hypothesis fails
        layer = sm.preset_layer("ring", 4, 0.2)
        net = sm.MultiLayerNetwork(layers=(layer,), N=np.array([100.0]))
        spec = sm.ModelSpec(net=net, beta=np.full(4, 0.3), delta=np.full(4, 0.25))
        c = sm.stability_conditions(spec)
        assert c.suf_lambda2 is None
        assert c.condition_value is None
        assert c.lambda2 is not None

    def test_scalar_has_no_lambda2(self, scalar_spec):
        c = sm.stability_conditions(scalar_spec)
        assert c.lambda2 is None and c.suf_lambda2 is None
        assert c.s == pytest.approx(-0.2)

    def test_flow_diagonal_equals_exit_rates_at_equilibrium(self):
        rng = np.random.default_rng(37)
        for _ in range(15):
            spec = random_spec(rng)
            mats = sm.equilibrium_matrices(spec)
            n = spec.n
            for a, layer in enumerate(spec.net.layers):
                block = mats.L[a * n:(a + 1) * n, a * n:(a + 1) * n]
                assert np.max(np.abs(np.diag(block) - layer.exit_rates)) <= 1e-10


class TestMarginRecoveryRates:
    def test_condition_holds_and_dfe_is_stable(self):
        layer = sm.preset_layer("complete", 20, 0.2)
        net = sm.MultiLayerNetwork(layers=(layer,), N=np.array([20000.0]))
        beta = np.full(20, 0.3)
        delta, info = sm.margin_recovery_rates(net, beta, 0.8, [0, 19])
        assert info["s"] < 0 < info["d"]
        assert delta[0] < beta[0]          # genuine deficit at the chosen nodes
        spec = sm.ModelSpec(net=net, beta=beta, delta=delta)
        report = sm.classify(spec)
        assert report.conditions.suf_lambda2 is True
        assert report.mu <= 0

    def test_rejects_degenerate_inputs(self):
        layer = sm.preset_layer("line", 3, 0.2)
        net = sm.MultiLayerNetwork(layers=(layer,), N=np.array([100.0]))
        beta = np.full(3, 0.3)
        with pytest.raises(ValueError):
            sm.margin_recovery_rates(net, beta, 1.5, [0])
        with pytest.raises(ValueError):
            sm.margin_recovery_rates(net, beta, 0.8, [0, 1, 2])

    def test_threshold_matches_dense_eigensolver(self):
        # anchor the flagship instance against a full dense spectrum
        layer = sm.preset_layer("complete", 20, 0.2)
        net = sm.MultiLayerNetwork(layers=(layer,), N=np.array([20000.0]))
        beta = np.full(20, 0.3)
        delta, _ = sm.margin_recovery_rates(net, beta, 0.8, [0, 19])
        mats = sm.equilibrium_matrices(sm.ModelSpec(net=net, beta=beta, delta=delta))
        mu = sm.spectral_abscissa(mats.G).mu
        oracle = float(np.max(np.linalg.eigvals(mats.G).real))
        assert mu == pytest.approx(oracle, abs=1e-10)

    def test_two_layers_heterogeneous_rates(self):
        n = 8
        l1 = sm.preset_layer("ring", n, 0.3)
        l2 = sm.preset_layer("star", n, 0.2, rates="mh_uniform")
        net = sm.MultiLayerNetwork(layers=(l1, l2), N=np.array([500.0, 300.0]))
        beta = np.linspace(0.2, 0.4, n)
        delta, info = sm.margin_recovery_rates(net, beta, 0.7, [2, 5])
        assert delta[2] - beta[2] == pytest.approx(info["s"], abs=1e-12)
        report = sm.classify(sm.ModelSpec(net=net, beta=beta, delta=delta))
        assert report.conditions.suf_lambda2 is True
        assert report.mu <= 0
