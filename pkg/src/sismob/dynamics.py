"""Deterministic coupled infection/mobility model.

State is the pair (p, x): infected fractions and class populations,
both stacked layer-major (class a, node i lives at index a*n + i).  The
model couples a node-local SIS interaction, weighted by each class's
share of the node population, with linear population flow driven by the
per-class generators:

    dp/dt = (B F(x) - D - L(x)) p - P B F(x) p
    dx^a/dt = (Q^a)^T x^a

F(x) holds the population shares f^a_i = x^a_i / sum_b x^b_i (so
F(x) 1 = 1), and L(x) is block-diagonal with zero row sums and
off-diagonal entries -q^a_ji x^a_j / x^a_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError
from .network import MultiLayerNetwork, _frozen_array

CLAMP_TOL = 1e-9
DEFAULT_DT = 0.01


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Full problem instance: network, infection and recovery rates.

    ``beta`` and ``delta`` are per-node rates (1/time), shared by all
    classes; beta must be positive, delta nonnegative.
    """

    net: MultiLayerNetwork
    beta: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        beta = _frozen_array(self.beta)
        delta = _frozen_array(self.delta)
        n = self.net.n
        if beta.shape != (n,):
            raise ValueError(f"beta must have length n={n}, got shape {beta.shape}")
        if delta.shape != (n,):
            raise ValueError(f"delta must have length n={n}, got shape {delta.shape}")
        if np.any(beta <= 0):
            raise ValueError("infection rates beta must be positive")
        if np.any(delta < 0):
            raise ValueError("recovery rates delta must be nonnegative")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "delta", delta)

    @property
    def n(self) -> int:
        return self.net.n

    @property
    def m(self) -> int:
        return self.net.m

    @property
    def nm(self) -> int:
        return self.net.nm

    def beta_stacked(self) -> np.ndarray:
        """beta repeated for every class (length nm)."""
        return np.tile(np.asarray(self.beta), self.m)

    def delta_stacked(self) -> np.ndarray:
        return np.tile(np.asarray(self.delta), self.m)

    def B(self) -> np.ndarray:
        """Block-diagonal infection-rate matrix (nm x nm)."""
        return np.diag(self.beta_stacked())

    def D(self) -> np.ndarray:
        """Block-diagonal recovery-rate matrix (nm x nm)."""
        return np.diag(self.delta_stacked())


@dataclass(frozen=True, eq=False)
class SystemState:
    """Infected fractions and class populations at one time instant."""

    t: float
    p: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        p = _frozen_array(self.p)
        x = _frozen_array(self.x)
        if p.ndim != 1 or p.shape != x.shape:
            raise ValueError(f"p and x must be equal-length vectors, got {p.shape}, {x.shape}")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("infected fractions p must lie in [0, 1]")
        if np.any(x <= 0):
            raise ValueError("class populations x must be positive")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "x", x)


@dataclass(frozen=True, eq=False)
class AssembledMatrices:
    """Dense model matrices at a population vector x.

    F (nm x nm) holds the node-share weights, L the block-diagonal flow
    matrix, and M = I - F the Laplacian complement of F.  ``pbar`` is
    the node-level infected fraction (only when p was supplied).
    """

    F: np.ndarray
    L: np.ndarray
    M: np.ndarray
    pbar: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time series of sampled states with provenance."""

    t: np.ndarray
    p: np.ndarray
    x: np.ndarray
    kind: str = "deterministic"
    dt: float = DEFAULT_DT
    seed: int | None = None

    def state(self, k: int) -> SystemState:
        return SystemState(t=float(self.t[k]), p=self.p[k], x=self.x[k])


def assemble(spec: ModelSpec, x: np.ndarray, p: np.ndarray | None = None) -> AssembledMatrices:
    """Build F(x), L(x), M = I - F(x) and, when p is given, pbar."""
    n, m, nm = spec.n, spec.m, spec.nm
    x = np.asarray(x, dtype=float)
    if x.shape != (nm,):
        raise ValueError(f"x must have length nm={nm}, got shape {x.shape}")
    if np.any(x <= 0):
        raise ValueError("assemble needs x >> 0 (L(x) is undefined otherwise)")

    X = x.reshape(m, n)
    shares = X / X.sum(axis=0)  # f^a_i, columns sum to one

    F = np.zeros((nm, nm))
    for a in range(m):
        for b in range(m):
            F[a * n:(a + 1) * n, b * n:(b + 1) * n] = np.diag(shares[b])

    L = np.zeros((nm, nm))
    for a, layer in enumerate(spec.net.layers):
        qt = layer.Q.T.copy()
        np.fill_diagonal(qt, 0.0)
        W = qt * (X[a][None, :] / X[a][:, None])  # W_ij = q_ji x_j / x_i
        block = np.diag(W.sum(axis=1)) - W
        L[a * n:(a + 1) * n, a * n:(a + 1) * n] = block

    M = np.eye(nm) - F

    pbar = None
    if p is not None:
        p = np.asarray(p, dtype=float)
        if p.shape != (nm,):
            raise ValueError(f"p must have length nm={nm}, got shape {p.shape}")
        pbar = (shares * p.reshape(m, n)).sum(axis=0)

    return AssembledMatrices(F=F, L=L, M=M, pbar=pbar)


class _Workspace:
    """Per-spec cache of transposed generators for the fast RHS path."""

    def __init__(self, spec: ModelSpec):
        self.n, self.m = spec.n, spec.m
        self.beta = np.asarray(spec.beta)
        self.delta = np.asarray(spec.delta)
        self.qt_full = [np.ascontiguousarray(layer.Q.T) for layer in spec.net.layers]
        self.qt_off = []
        for qt in self.qt_full:
            q0 = qt.copy()
            np.fill_diagonal(q0, 0.0)
            self.qt_off.append(q0)

    def rhs(self, p: np.ndarray, x: np.ndarray):
        n, m = self.n, self.m
        P = p.reshape(m, n)
        X = x.reshape(m, n)
        pbar = (X * P).sum(axis=0) / X.sum(axis=0)
        dP = np.empty_like(P)
        dX = np.empty_like(X)
        for a in range(m):
            inflow = self.qt_off[a] @ X[a]            # sum_{j != i} q_ji x_j
            inflow_inf = self.qt_off[a] @ (X[a] * P[a])
            dP[a] = (self.beta * pbar * (1.0 - P[a]) - self.delta * P[a]
                     - (P[a] * inflow - inflow_inf) / X[a])
            dX[a] = self.qt_full[a] @ X[a]
        return dP.ravel(), dX.ravel()


def rhs(spec: ModelSpec, state: SystemState):
    """Time derivative (dp, dx) of the coupled model at a state."""
    if np.any(state.x <= 0):
        raise ValueError("rhs needs x >> 0")
    return _Workspace(spec).rhs(np.asarray(state.p), np.asarray(state.x))


def integrate(spec: ModelSpec, initial: SystemState, t_end: float,
              dt: float = DEFAULT_DT, record_every: int = 1) -> Trajectory:
    """Fixed-step classical RK4 over the coupled model.

    Samples are recorded every ``record_every`` steps (always including
    the initial and final states).  Infected fractions are clamped back
    into [0, 1] only when the overshoot is at most ``CLAMP_TOL``; a
    larger excursion raises :class:`IntegrationError` since the
    continuous flow is invariant and only discretization error should
    ever leave the box.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    steps = int(round(t_end / dt))
    if steps <= 0:
        steps = 0

    ws = _Workspace(spec)
    p = np.array(initial.p, dtype=float)
    x = np.array(initial.x, dtype=float)

    ts = [float(initial.t)]
    ps = [p.copy()]
    xs = [x.copy()]

    t = float(initial.t)
    for k in range(steps):
        kp1, kx1 = ws.rhs(p, x)
        kp2, kx2 = ws.rhs(p + 0.5 * dt * kp1, x + 0.5 * dt * kx1)
        kp3, kx3 = ws.rhs(p + 0.5 * dt * kp2, x + 0.5 * dt * kx2)
        kp4, kx4 = ws.rhs(p + dt * kp3, x + dt * kx3)
        p = p + (dt / 6.0) * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4)
        x = x + (dt / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4)
        t = float(initial.t) + (k + 1) * dt

        overshoot = max(-float(p.min()), float(p.max()) - 1.0, 0.0)
        if overshoot > CLAMP_TOL:
            raise IntegrationError(
                f"p left [0,1] by {overshoot:.3e} at t={t:.6g}; reduce dt")
        np.clip(p, 0.0, 1.0, out=p)
        if float(x.min()) <= 0.0:
            raise IntegrationError(f"x became nonpositive at t={t:.6g}; reduce dt")

        if (k + 1) % record_every == 0 or k + 1 == steps:
            ts.append(t)
            ps.append(p.copy())
            xs.append(x.copy())

    return Trajectory(t=np.array(ts), p=np.array(ps), x=np.array(xs),
                      kind="deterministic", dt=dt, seed=None)


def integrate_until_settled(spec: ModelSpec, initial: SystemState,
                            dt: float = DEFAULT_DT, t_max: float = 5000.0,
                            settle_tol: float = 1e-9,
                            chunk: float = 50.0) -> SystemState:
    """Integrate in chunks until ||dp/dt||_inf and ||dx/dt||_inf drop
    below ``settle_tol``, returning the settled state.

    Raises :class:`IntegrationError` if the horizon ``t_max`` is reached
    before the derivative settles.
    """
    state = initial
    ws = _Workspace(spec)
    while state.t < t_max:
        horizon = min(chunk, t_max - state.t)
        if horizon < dt:
            break
        traj = integrate(spec, state, horizon, dt=dt, record_every=max(1, int(round(horizon / dt))))
        state = traj.state(-1)
        dp, dx = ws.rhs(np.asarray(state.p), np.asarray(state.x))
        if max(np.max(np.abs(dp)), np.max(np.abs(dx))) <= settle_tol:
            return state
    raise IntegrationError(f"state did not settle to {settle_tol} within t={t_max}")


def write_trajectory_csv(traj: Trajectory, path, n: int, m: int):
    """Write a trajectory as CSV: t, p[a][i]..., x[a][i]... with
    17-significant-digit numbers for exact round trips."""
    cols = (["t"]
            + [f"p[{a}][{i}]" for a in range(m) for i in range(n)]
            + [f"x[{a}][{i}]" for a in range(m) for i in range(n)])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for k in range(len(traj.t)):
            row = [traj.t[k], *traj.p[k], *traj.x[k]]
            fh.write(",".join(format(val, ".17g") for val in row) + "\n")
