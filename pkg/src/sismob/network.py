"""Multi-layer mobility networks.

Each population class moves between patches according to its own
continuous-time Markov chain.  A layer stores the patch digraph together
with the CTMC generator matrix Q: nonnegative off-diagonal rates, zero
row sums, and q_ij > 0 exactly on the declared edges.  All analysis
downstream requires every layer digraph to be strongly connected
(irreducible Q), which guarantees a unique positive stationary
distribution per layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import graphs
from .errors import MalformedGeneratorError, NotStronglyConnectedError

ROW_SUM_TOL = 1e-12
STATIONARY_RESIDUAL_TOL = 1e-12


def _frozen_array(values, dtype=float) -> np.ndarray:
    a = np.array(values, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MobilityLayer:
    """One class's patch digraph plus its CTMC generator.

    Parameters
    ----------
    n : int
        Patch count.
    edges : sequence of (i, j)
        Directed edges, 0-indexed.
    Q : (n, n) array
        Instantaneous transition rates (1/time); row i, column j holds
        the rate from patch i to patch j, and the diagonal holds minus
        the total exit rate.
    """

    n: int
    edges: tuple
    Q: np.ndarray

    def __post_init__(self):
        Q = _frozen_array(self.Q)
        if Q.shape != (self.n, self.n):
            raise ValueError(f"Q must be {self.n}x{self.n}, got shape {Q.shape}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "edges", tuple((int(i), int(j)) for i, j in self.edges))

    @property
    def exit_rates(self) -> np.ndarray:
        """Total rate of leaving each patch (nu_i = -q_ii)."""
        return -np.diag(self.Q)


@dataclass(frozen=True, eq=False)
class MultiLayerNetwork:
    """Stack of mobility layers over a shared patch set.

    ``N[a]`` is the total number of individuals in class ``a``.
    """

    layers: tuple
    N: np.ndarray

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        n = layers[0].n
        for k, layer in enumerate(layers):
            if layer.n != n:
                raise ValueError(f"layer {k} has n={layer.n}, expected n={n}")
        N = _frozen_array(self.N)
        if N.shape != (len(layers),):
            raise ValueError(f"N must have one entry per layer, got shape {N.shape}")
        if np.any(N <= 0):
            raise ValueError("class populations N must be positive")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "N", N)

    @property
    def n(self) -> int:
        return self.layers[0].n

    @property
    def m(self) -> int:
        return len(self.layers)

    @property
    def nm(self) -> int:
        return self.n * self.m


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    """Per-layer stationary laws and the stacked population vector.

    ``v_per_layer[a]`` is the probability vector of layer ``a``
    (positive, sums to one); ``v`` stacks ``N[a] * v_per_layer[a]``
    layer-major and is measured in individuals.
    """

    v_per_layer: tuple
    v: np.ndarray


@dataclass
class LayerValidationReport:
    ok: bool
    row_sum_error: float
    sign_ok: bool
    strongly_connected: bool
    messages: list = field(default_factory=list)

    def raise_if_invalid(self):
        if self.ok:
            return
        detail = "; ".join(self.messages)
        if not self.strongly_connected:
            raise NotStronglyConnectedError(detail)
        raise MalformedGeneratorError(detail)


def validate_layer(layer: MobilityLayer) -> LayerValidationReport:
    """Check the generator contract and strong connectivity of a layer.

    Row sums must vanish to within ``ROW_SUM_TOL`` (scaled by the
    largest rate), the sign pattern of Q must match the edge set, and
    the edge digraph must be strongly connected.  A failing report is
    fatal for every downstream analysis operation.
    """
    Q = layer.Q
    messages = []
    scale = max(1.0, float(np.max(np.abs(Q))) if Q.size else 1.0)

    row_sum_error = float(np.max(np.abs(Q.sum(axis=1)))) if Q.size else 0.0
    if row_sum_error > ROW_SUM_TOL * scale:
        messages.append(f"generator rows must sum to zero (max |row sum| = {row_sum_error:.3e})")

    sign_ok = True
    edge_set = set(layer.edges)
    for i in range(layer.n):
        for j in range(layer.n):
            if i == j:
                continue
            q = Q[i, j]
            if q < 0:
                sign_ok = False
                messages.append(f"negative off-diagonal rate q[{i},{j}] = {q}")
            elif (q > 0) != ((i, j) in edge_set):
                sign_ok = False
                messages.append(f"rate q[{i},{j}] = {q} disagrees with edge set")

    strongly_connected = graphs.is_strongly_connected(layer.n, layer.edges)
    if not strongly_connected:
        messages.append("mobility digraph is not strongly connected")

    ok = not messages
    return LayerValidationReport(ok, row_sum_error, sign_ok, strongly_connected, messages)


def stationary_distribution(layer: MobilityLayer) -> np.ndarray:
    """Stationary probability vector v of a validated layer.

    Solves Q^T v = 0 with the normalization 1^T v = 1 as one dense
    square system: the last row of Q^T is redundant for an irreducible
    generator (the columns of Q sum to zero), so it is replaced by the
    normalization row.  Deterministic, no complex arithmetic.
    """
    validate_layer(layer).raise_if_invalid()
    n = layer.n
    A = layer.Q.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    v = np.linalg.solve(A, b)

    scale = max(1.0, float(np.max(np.abs(layer.Q))))
    residual = float(np.max(np.abs(layer.Q.T @ v)))
    if residual > STATIONARY_RESIDUAL_TOL * scale:
        raise MalformedGeneratorError(
            f"stationary solve residual {residual:.3e} exceeds tolerance; "
            "generator may have multiple null vectors")
    if np.any(v <= 0):
        raise NotStronglyConnectedError(
            "stationary vector has nonpositive entries; generator is not irreducible")
    return v


def network_stationary(net: MultiLayerNetwork) -> StationaryDistribution:
    """Stationary laws of all layers plus the stacked population vector."""
    per_layer = tuple(stationary_distribution(layer) for layer in net.layers)
    v = np.concatenate([net.N[a] * per_layer[a] for a in range(net.m)])
    return StationaryDistribution(per_layer, _frozen_array(v))


def layer_from_edge_rates(n: int, triples) -> MobilityLayer:
    """Layer from explicit (i, j, rate) triples, one per directed edge;
    the diagonal is filled in."""
    Q = np.zeros((n, n))
    edges = []
    for i, j, rate in triples:
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"self-loop rate on node {i} is not allowed")
        if rate <= 0:
            raise ValueError(f"edge ({i},{j}) needs a positive rate, got {rate}")
        if (i, j) in edges:
            raise ValueError(f"duplicate rate for edge ({i},{j})")
        Q[i, j] = float(rate)
        edges.append((i, j))
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return MobilityLayer(n=n, edges=tuple(edges), Q=Q)


def equal_exit_layer(n: int, edges, rate_scale: float) -> MobilityLayer:
    """Layer whose rates split each node's exit rate equally over its
    out-neighbors: q_ij = rate_scale / outdeg(i)."""
    if rate_scale <= 0:
        raise ValueError(f"rate_scale must be positive, got {rate_scale}")
    edges = [(int(i), int(j)) for i, j in edges]
    if n == 1:
        return MobilityLayer(n=1, edges=(), Q=np.zeros((1, 1)))
    deg = graphs.out_degrees(n, edges)
    if np.any(deg == 0):
        isolated = int(np.argmax(deg == 0))
        raise NotStronglyConnectedError(f"node {isolated} has no outgoing edges")
    triples = [(i, j, rate_scale / deg[i]) for i, j in edges]
    return layer_from_edge_rates(n, triples)


def preset_layer(name: str, n: int, rate_scale: float, rates: str = "equal_exit") -> MobilityLayer:
    """Named preset graph turned into a layer.

    ``rates="equal_exit"`` splits a common exit rate over each node's
    neighbors; ``rates="mh_uniform"`` uses Metropolis-Hastings rates for
    a uniform stationary law (symmetric Q on any graph).
    """
    edges = graphs.preset_edges(name, n)
    if rates == "equal_exit":
        return equal_exit_layer(n, edges, rate_scale)
    if rates == "mh_uniform":
        return metropolis_hastings_rates(n, edges, np.full(n, 1.0 / n), rate_scale)
    raise ValueError(f"unknown rate convention {rates!r}")


def metropolis_hastings_rates(n: int, edges, target: np.ndarray,
                              rate_scale: float) -> MobilityLayer:
    """Layer whose CTMC has the prescribed stationary distribution.

    The graph is treated as undirected (edges are symmetrized).  With a
    uniform proposal over the ``d_i`` neighbors of node i, the accepted
    rate along edge (i, j) is::

        q_ij = rate_scale * (1 / d_i) * min(1, target_j * d_i / (target_i * d_j))

    which satisfies detailed balance with ``target``.  For a uniform
    target this reduces to q_ij = rate_scale * min(1/d_i, 1/d_j), a
    symmetric matrix.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (n,):
        raise ValueError(f"target must have length {n}, got shape {target.shape}")
    if np.any(target <= 0):
        raise ValueError("target distribution must be strictly positive")
    if abs(target.sum() - 1.0) > 1e-9:
        raise ValueError("target distribution must sum to one")
    if rate_scale <= 0:
        raise ValueError(f"rate_scale must be positive, got {rate_scale}")

    und = {(int(i), int(j)) for i, j in edges} | {(int(j), int(i)) for i, j in edges}
    und = sorted(p for p in und if p[0] != p[1])
    if n > 1 and not graphs.is_strongly_connected(n, und):
        raise NotStronglyConnectedError("graph must be connected to target a stationary law")
    if n == 1:
        return MobilityLayer(n=1, edges=(), Q=np.zeros((1, 1)))

    deg = graphs.out_degrees(n, und)
    triples = []
    for i, j in und:
        accept = min(1.0, (target[j] * deg[i]) / (target[i] * deg[j]))
        triples.append((i, j, rate_scale * accept / deg[i]))
    return layer_from_edge_rates(n, triples)
