import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sismob as sm
from sismob.dynamics import SystemState, write_trajectory_csv

from conftest import assert_trajectory_invariants, random_spec


def componentwise_rhs(spec, p, x):
    """Straight transcription of the per-entry infection derivative,
    used as an oracle for the vectorized path."""
    n, m = spec.n, spec.m
    dp = np.zeros(n * m)
    for a, layer in enumerate(spec.net.layers):
        for i in range(n):
            k = a * n + i
            tot = sum(x[b * n + i] for b in range(m))
            pbar = sum(x[b * n + i] * p[b * n + i] for b in range(m)) / tot
            l_ii = sum(layer.Q[j, i] * x[a * n + j] / x[a * n + i]
                       for j in range(n) if j != i)
            acc = -spec.delta[i] * p[k] + spec.beta[i] * pbar * (1 - p[k]) - l_ii * p[k]
            for j in range(n):
                if j != i:
                    l_ij = -layer.Q[j, i] * x[a * n + j] / x[a * n + i]
                    acc -= l_ij * p[a * n + j]
            dp[k] = acc
    return dp


class TestAssemble:
    def test_single_class_shares_are_identity(self, two_node_spec):
        mats = sm.assemble(two_node_spec, np.array([50.0, 50.0]))
        assert np.allclose(mats.F, np.eye(2))
        assert np.allclose(mats.M, 0.0)

    def test_equal_populations_split_half(self):
        layer = sm.preset_layer("line", 2, 0.2)
        net = sm.MultiLayerNetwork(layers=(layer, layer), N=np.array([10.0, 10.0]))
        spec = sm.ModelSpec(net=net, beta=np.full(2, 0.3), delta=np.full(2, 0.1))
        mats = sm.assemble(spec, np.array([4.0, 6.0, 4.0, 6.0]))
        assert mats.F[0, 0] == pytest.approx(0.5)
        assert mats.F[0, 2] == pytest.approx(0.5)

    def test_two_node_flow_matrix_by_hand(self, two_node_spec):
        # l_ij = -q_ji x_j / x_i evaluated entrywise at x = v
        mats = sm.assemble(two_node_spec, np.array([50.0, 50.0]))
        assert np.allclose(mats.L, [[0.2, -0.2], [-0.2, 0.2]], atol=1e-15)

    def test_nonpositive_population_rejected(self, two_node_spec):
        with pytest.raises(ValueError):
            sm.assemble(two_node_spec, np.array([1.0, 0.0]))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**9))
    def test_share_rows_sum_to_one_and_flow_rows_to_zero(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_spec(rng)
        x = rng.uniform(0.5, 5.0, size=spec.nm)
        mats = sm.assemble(spec, x)
        assert np.max(np.abs(mats.F.sum(axis=1) - 1.0)) <= 1e-13
        assert np.max(np.abs(mats.L.sum(axis=1))) <= 1e-13
        assert np.max(np.abs(mats.M.sum(axis=1))) <= 1e-13


class TestRhs:
    def test_disease_free_state_is_invariant(self, two_node_spec):
        state = SystemState(t=0.0, p=np.zeros(2), x=np.array([30.0, 70.0]))
        dp, _ = sm.rhs(two_node_spec, state)
        assert np.all(dp == 0.0)

    def test_scalar_logistic_form(self, scalar_spec):
        for p in (0.0, 0.2, 0.9):
            state = SystemState(t=0.0, p=np.array([p]), x=np.array([1000.0]))
            dp, dx = sm.rhs(scalar_spec, state)
            assert dp[0] == pytest.approx(0.3 * p * (1 - p) - 0.1 * p, abs=1e-15)
            assert dx[0] == 0.0

    def test_stationary_population_has_zero_flow(self, two_node_spec):
        v = sm.network_stationary(two_node_spec.net).v
        state = SystemState(t=0.0, p=np.full(2, 0.3), x=v)
        _, dx = sm.rhs(two_node_spec, state)
        assert np.max(np.abs(dx)) <= 1e-14

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**9))
    def test_matrix_and_componentwise_forms_agree(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_spec(rng)
        p = rng.uniform(0.0, 1.0, size=spec.nm)
        x = rng.uniform(0.5, 5.0, size=spec.nm)
        dp, _ = sm.rhs(spec, SystemState(t=0.0, p=p, x=x))

        mats = sm.assemble(spec, x)
        B, D = spec.B(), spec.D()
        dp_matrix = (B @ mats.F - D - mats.L) @ p - p * (B @ (mats.F @ p))
        assert np.max(np.abs(dp - dp_matrix)) <= 1e-14

        dp_components = componentwise_rhs(spec, p, x)
        assert np.max(np.abs(dp - dp_components)) <= 1e-14


class TestIntegrate:
    def test_scalar_converges_to_one_minus_delta_over_beta(self, scalar_spec):
        initial = SystemState(t=0.0, p=np.array([0.01]), x=np.array([1000.0]))
        traj = sm.integrate(scalar_spec, initial, 200.0, dt=0.01, record_every=100)
        assert traj.p[-1][0] == pytest.approx(2.0 / 3.0, abs=1e-9)
        assert_trajectory_invariants(scalar_spec, traj)

    def test_zero_infection_stays_zero_and_population_settles(self, two_node_spec):
        x0 = np.array([20.0, 80.0])
        initial = SystemState(t=0.0, p=np.zeros(2), x=x0)
        traj = sm.integrate(two_node_spec, initial, 100.0, dt=0.01, record_every=100)
        assert np.all(traj.p == 0.0)
        v = sm.network_stationary(two_node_spec.net).v
        assert np.max(np.abs(traj.x[-1] - v)) <= 1e-8
        assert_trajectory_invariants(two_node_spec, traj)

    def test_positive_seed_spreads_everywhere(self, two_node_spec):
        # nonzero, nonnegative start: strictly positive at any later time
        initial = SystemState(t=0.0, p=np.array([0.05, 0.0]), x=np.array([50.0, 50.0]))
        traj = sm.integrate(two_node_spec, initial, 1.0, dt=0.01)
        assert np.all(traj.p[1:] > 0.0)

    def test_all_infected_start_stays_in_box(self, two_node_spec):
        # boundary start p = 1 flows inward toward the endemic level
        initial = SystemState(t=0.0, p=np.ones(2), x=np.array([50.0, 50.0]))
        traj = sm.integrate(two_node_spec, initial, 200.0, dt=0.01, record_every=100)
        assert_trajectory_invariants(two_node_spec, traj)
        p_star = sm.endemic_fixed_point(two_node_spec)
        assert np.max(np.abs(traj.p[-1] - p_star)) <= 1e-6

    def test_oversized_step_raises(self, two_node_spec):
        initial = SystemState(t=0.0, p=np.full(2, 0.5), x=np.array([50.0, 50.0]))
        with pytest.raises(sm.IntegrationError):
            sm.integrate(two_node_spec, initial, 400.0, dt=25.0)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10**9))
    def test_box_invariance_and_conservation(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_spec(rng, n_max=5, m_max=2)
        p0 = rng.uniform(0.0, 1.0, size=spec.nm)
        x0 = rng.uniform(1.0, 10.0, size=spec.nm)
        traj = sm.integrate(spec, SystemState(t=0.0, p=p0, x=x0), 20.0, dt=0.01,
                            record_every=10)
        assert_trajectory_invariants(spec, traj)

    def test_settle_helper_reaches_equilibrium(self, two_node_spec):
        initial = SystemState(t=0.0, p=np.full(2, 0.01), x=np.array([40.0, 60.0]))
        state = sm.integrate_until_settled(two_node_spec, initial, dt=0.01,
                                           t_max=2000.0, settle_tol=1e-10)
        dp, dx = sm.rhs(two_node_spec, state)
        assert max(np.max(np.abs(dp)), np.max(np.abs(dx))) <= 1e-10


class TestTrajectoryCsv:
    def test_round_trip_exact(self, two_node_spec, tmp_path):
        initial = SystemState(t=0.0, p=np.array([0.01, 0.02]), x=np.array([55.0, 45.0]))
        traj = sm.integrate(two_node_spec, initial, 1.0, dt=0.1)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(traj, path, two_node_spec.n, two_node_spec.m)
        data = np.genfromtxt(path, delimiter=",", names=True)
        assert len(data) == len(traj.t)
        assert np.array_equal(data["t"], traj.t)
        assert np.array_equal(data["p00"], traj.p[:, 0])   # header p[0][0]
        assert np.array_equal(data["x01"], traj.x[:, 1])
