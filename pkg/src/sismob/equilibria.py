"""Equilibrium computation and stability classification.

At the stationary populations v the infection dynamics linearize to the
irreducible Metzler matrix B F* - D - L*.  Its spectral abscissa mu is
the stability threshold: the disease-free equilibrium (p = 0, x = v) is
globally asymptotically stable iff mu <= 0, and a unique positive
endemic equilibrium exists iff mu > 0.  When at least one node has a
positive recovery rate the threshold can equivalently be stated through
the reproduction number R0 = rho(A F*) with A = (L* + D)^{-1} B.

The endemic point is found by iterating the monotone self-map

    H(p) = (I + A (P + (I - P) M))^{-1} A p

downward from p = 1: H is entrywise monotone with H(1) <= 1, so the
iterates decrease monotonically onto the fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ModelSpec, assemble
from .errors import ConvergenceError
from .network import network_stationary, validate_layer
from .spectral import spectral_abscissa, spectral_radius

MU_TIE_TOL = 1e-10
FIXED_POINT_TOL = 1e-10
FIXED_POINT_MAX_ITER = 100_000
RESIDUAL_TOL = 1e-8
# Floating-point guard when deciding the lambda2 sufficient condition;
# instances built to satisfy it with equality must not flip sign.
CONDITION_EVAL_TOL = 1e-12

DFE_STABLE = "DFE_stable"
DFE_UNSTABLE = "DFE_unstable_EE_exists"


@dataclass(frozen=True, eq=False)
class EquilibriumMatrices:
    """Model matrices evaluated at the stationary populations."""

    v: np.ndarray
    v_per_layer: tuple
    F: np.ndarray
    L: np.ndarray
    M: np.ndarray
    B: np.ndarray
    D: np.ndarray
    G: np.ndarray              # B F - D - L, the linearization at the DFE
    A: np.ndarray | None       # (L + D)^{-1} B, defined when D != 0


@dataclass
class ConditionReport:
    """Verdicts of the recovery-vs-infection stability conditions.

    ``nec_per_node``/``nec_exists`` are necessary for a stable DFE,
    ``suf_all`` and ``suf_lambda2`` sufficient.  ``suf_lambda2`` is None
    when the bound does not apply (all recovery deficits equal, or a
    one-dimensional system).
    """

    nec_per_node: list
    nec_exists: bool
    suf_all: bool
    suf_lambda2: bool | None
    lambda2: float | None
    s: float
    s_lower: float | None
    w: np.ndarray | None
    weighted_deficit_sum: float | None
    condition_value: float | None

    def to_dict(self) -> dict:
        return {
            "nec_per_node": [bool(b) for b in self.nec_per_node],
            "nec_exists": bool(self.nec_exists),
            "suf_all": bool(self.suf_all),
            "suf_lambda2": None if self.suf_lambda2 is None else bool(self.suf_lambda2),
            "lambda2": self.lambda2,
            "s": self.s,
            "s_lower": self.s_lower,
            "w": None if self.w is None else [float(t) for t in self.w],
            "weighted_deficit_sum": self.weighted_deficit_sum,
            "condition_value": self.condition_value,
        }


@dataclass
class EquilibriumReport:
    """Stationary populations, threshold quantities, and classification."""

    v: np.ndarray
    mu: float
    R0: float | None
    classification: str
    marginal: bool
    p_star: np.ndarray | None
    conditions: ConditionReport

    def to_dict(self) -> dict:
        return {
            "v": [float(t) for t in self.v],
            "mu": self.mu,
            "R0": self.R0,
            "classification": self.classification,
            "marginal": bool(self.marginal),
            "p_star": None if self.p_star is None else [float(t) for t in self.p_star],
            "conditions": self.conditions.to_dict(),
        }


def equilibrium_matrices(spec: ModelSpec) -> EquilibriumMatrices:
    """Validate all layers, then assemble F*, L*, M, the DFE
    linearization, and (when defined) A = (L* + D)^{-1} B."""
    for layer in spec.net.layers:
        validate_layer(layer).raise_if_invalid()
    stat = network_stationary(spec.net)
    mats = assemble(spec, stat.v)
    B = spec.B()
    D = spec.D()
    G = B @ mats.F - D - mats.L
    A = None
    if np.any(np.asarray(spec.delta) > 0):
        A = np.linalg.solve(mats.L + D, B)
    return EquilibriumMatrices(v=stat.v, v_per_layer=stat.v_per_layer,
                               F=mats.F, L=mats.L, M=mats.M, B=B, D=D, G=G, A=A)


def _left_null_vector(A: np.ndarray) -> np.ndarray:
    """Positive left null vector of an irreducible Laplacian-like matrix,
    via the same replaced-row dense solve used for stationary laws."""
    n = A.shape[0]
    T = A.T.copy()
    T[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    w = np.linalg.solve(T, b)
    if np.any(w <= 0):
        raise ConvergenceError("left null vector is not positive; matrix not irreducible?")
    return w


def endemic_fixed_point(spec: ModelSpec, mats: EquilibriumMatrices | None = None,
                        mu: float | None = None,
                        tol: float = FIXED_POINT_TOL,
                        max_iter: int = FIXED_POINT_MAX_ITER) -> np.ndarray:
    """Endemic infected fractions p* >> 0, by monotone fixed-point
    iteration from p = 1.

    Requires mu > 0 and at least one positive recovery rate (``mu`` may
    be passed to skip recomputing it).  The returned point is certified
    by the stationarity residual
    ||(B F* - D - L* - P* B F*) p*||_inf <= 1e-8.
    """
    if mats is None:
        mats = equilibrium_matrices(spec)
    if mats.A is None:
        raise ValueError("endemic fixed point needs at least one positive recovery rate "
                         "(with none, the endemic state is p = 1)")
    if mu is None:
        mu = float(spectral_abscissa(mats.G).mu)
    if mu <= MU_TIE_TOL:
        raise ValueError(f"no endemic equilibrium: threshold mu = {mu:.3e} is not positive")
    A, M = mats.A, mats.M
    nm = A.shape[0]
    eye = np.eye(nm)

    p = np.ones(nm)
    for _ in range(max_iter):
        T = eye + A @ (np.diag(p) + (1.0 - p)[:, None] * M)
        p_next = np.linalg.solve(T, A @ p)
        step = float(np.max(np.abs(p_next - p)))
        p = p_next
        if step <= tol:
            break
    else:
        raise ConvergenceError(
            f"fixed-point iteration did not converge (last step {step:.3e})")

    residual = float(np.max(np.abs(mats.G @ p - p * (mats.B @ (mats.F @ p)))))
    if residual > RESIDUAL_TOL:
        raise ConvergenceError(f"endemic point residual {residual:.3e} exceeds {RESIDUAL_TOL}")
    return p


def apply_infection_map(mats: EquilibriumMatrices, p: np.ndarray) -> np.ndarray:
    """One application of the monotone map H whose fixed points are the
    endemic equilibria."""
    if mats.A is None:
        raise ValueError("H is defined only when some recovery rate is positive")
    nm = mats.A.shape[0]
    p = np.asarray(p, dtype=float)
    T = np.eye(nm) + mats.A @ (np.diag(p) + (1.0 - p)[:, None] * mats.M)
    return np.linalg.solve(T, mats.A @ p)


def stability_conditions(spec: ModelSpec, mats: EquilibriumMatrices | None = None) -> ConditionReport:
    """Evaluate the necessary and sufficient DFE-stability conditions.

    (per-node necessary)  every node i has some class a with
                          delta_i > beta_i - nu^a_i;
    (exists necessary)    some node has delta_i >= beta_i;
    (all sufficient)      every node has delta_i >= beta_i;
    (lambda2 sufficient)  the weighted-Laplacian eigenvalue bound

        lambda2 / ((1 + sqrt(1 + lambda2 / sum_k w_k (delta_k - beta_k - s)))^2 nm + 1) + s >= 0

    with s = min_i (delta_i - beta_i), w the positive left null vector
    of (B M + L*) scaled to max w = 1, and lambda2 the second smallest
    eigenvalue of (W (B M + L*) + (B M + L*)^T W) / 2.  The margin a
    given mobility structure can absorb is s_lower = -lambda2 / (4 m n + 1).
    """
    if mats is None:
        mats = equilibrium_matrices(spec)
    beta = np.asarray(spec.beta)
    delta = np.asarray(spec.delta)
    n, m, nm = spec.n, spec.m, spec.nm

    nu = np.stack([layer.exit_rates for layer in spec.net.layers])  # (m, n)
    nec_per_node = [bool(np.any(delta[i] > beta[i] - nu[:, i])) for i in range(n)]
    nec_exists = bool(np.any(delta >= beta))
    suf_all = bool(np.all(delta >= beta))

    s = float(np.min(delta - beta))
    if nm < 2:
        return ConditionReport(nec_per_node, nec_exists, suf_all, None,
                               None, s, None, None, None, None)

    lap = mats.B @ mats.M + mats.L
    w = _left_null_vector(lap)
    w = w / w.max()
    W = np.diag(w)
    sym = 0.5 * (W @ lap + lap.T @ W)
    eigs = np.linalg.eigvalsh(sym)
    lambda2 = float(eigs[1])
    s_lower = -lambda2 / (4.0 * m * n + 1.0)

    deficits = np.tile(delta - beta, m) - s  # per stacked index, >= 0
    weighted = float(w @ deficits)
    if weighted <= 0.0:
        # All recovery deficits equal: the perturbed-Laplacian bound does
        # not apply; report it as not applicable rather than guessing.
        return ConditionReport(nec_per_node, nec_exists, suf_all, None,
                               lambda2, s, s_lower, w, weighted, None)

    value = lambda2 / ((1.0 + np.sqrt(1.0 + lambda2 / weighted)) ** 2 * nm + 1.0) + s
    suf_lambda2 = bool(value >= -CONDITION_EVAL_TOL)
    return ConditionReport(nec_per_node, nec_exists, suf_all, suf_lambda2,
                           lambda2, s, s_lower, w, weighted, float(value))


def classify(spec: ModelSpec) -> EquilibriumReport:
    """Full equilibrium analysis of a model instance.

    Computes the stationary populations, the threshold mu, R0 when at
    least one recovery rate is positive, the stability-condition
    verdicts, and the endemic point when one exists.  |mu| within
    MU_TIE_TOL of zero is flagged marginal (and classified stable, since
    the disease-free state is stable exactly at the threshold).
    """
    mats = equilibrium_matrices(spec)
    mu = float(spectral_abscissa(mats.G).mu)

    R0 = None
    if mats.A is not None:
        R0 = float(spectral_radius(mats.A @ mats.F).rho)

    marginal = abs(mu) <= MU_TIE_TOL
    if mu > MU_TIE_TOL:
        classification = DFE_UNSTABLE
        if mats.A is None:
            p_star = np.ones(spec.nm)  # no recovery anywhere: everyone ends up infected
        else:
            p_star = endemic_fixed_point(spec, mats, mu=mu)
    else:
        classification = DFE_STABLE
        p_star = None

    conditions = stability_conditions(spec, mats)
    return EquilibriumReport(v=mats.v, mu=mu, R0=R0, classification=classification,
                             marginal=marginal, p_star=p_star, conditions=conditions)


def margin_recovery_rates(net, beta, s_factor: float, deficit_nodes,
                          slack: float = 1e-9):
    """Recovery rates that stabilize the disease-free state despite a
    recovery deficit at chosen nodes.

    Given infection rates and a mobility network, this computes the
    eigenvalue quantities of the lambda2 sufficient condition, sets the
    worst deficit to s = s_factor * s_lower (s_factor in (0, 1)), puts
    delta_i = beta_i + s at the deficit nodes, and solves the condition
    with equality for the uniform extra recovery d at all other nodes,
    inflated by a relative ``slack`` so the condition holds robustly in
    floating point.

    Returns (delta, info) where info carries lambda2, s_lower, s, d.
    """
    beta = np.asarray(beta, dtype=float)
    n, m, nm = net.n, net.m, net.nm
    if not 0.0 < s_factor < 1.0:
        raise ValueError(f"s_factor must lie in (0, 1), got {s_factor}")
    deficit_nodes = sorted({int(i) for i in deficit_nodes})
    if not deficit_nodes or len(deficit_nodes) >= n:
        raise ValueError("deficit_nodes must be a nonempty proper subset of the nodes")
    if any(i < 0 or i >= n for i in deficit_nodes):
        raise ValueError(f"deficit_nodes out of range for n={n}")
    if nm < 2:
        raise ValueError("the lambda2 construction needs nm >= 2")

    for layer in net.layers:
        validate_layer(layer).raise_if_invalid()
    stat = network_stationary(net)
    probe = ModelSpec(net=net, beta=beta, delta=np.zeros(n))
    asm = assemble(probe, stat.v)
    lap = probe.B() @ asm.M + asm.L
    w = _left_null_vector(lap)
    w = w / w.max()
    W = np.diag(w)
    lambda2 = float(np.linalg.eigvalsh(0.5 * (W @ lap + lap.T @ W))[1])

    s_lower = -lambda2 / (4.0 * m * n + 1.0)
    s = s_factor * s_lower

    # Invert the condition at equality for the weighted deficit sum T:
    # lambda2 / ((1 + sqrt(1 + lambda2/T))^2 nm + 1) = -s.
    g = (lambda2 / (-s) - 1.0) / nm
    target = lambda2 / ((np.sqrt(g) - 1.0) ** 2 - 1.0)

    deficit_mask = np.zeros(n, dtype=bool)
    deficit_mask[deficit_nodes] = True
    w_rest = float(w @ np.tile(~deficit_mask, m))
    d = (target / w_rest) * (1.0 + slack)

    delta = beta + s + np.where(deficit_mask, 0.0, d)
    info = {"lambda2": lambda2, "s_lower": float(s_lower), "s": float(s), "d": float(d)}
    return delta, info
