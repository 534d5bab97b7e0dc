"""Finite irreducible reversible Markov chains, generators, and file formats.

A chain is the triple (states, Q, pi): a row-stochastic kernel Q and its
stationary probability vector pi satisfying detailed balance.  The adjacency
relation x ~ y holds iff Q[x, y] > 0 for x != y; self loops are allowed in Q
(lazy chains) but never count as edges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import InvalidParameters, NotIrreducible, NotReversible, NotStochastic

#: relative tolerance for row sums, detailed balance and stationarity
VALIDATION_RTOL = 1e-10


@dataclass(frozen=True)
class ChainStats:
    """Degree and measure extremes used by the inequality checks."""

    q_min: float
    pi_min: float
    pi_max: float
    deg_weighted: np.ndarray      # D(x) = sum_{y != x} Q(x, y)
    deg_weighted_max: float       # D
    deg_pi: np.ndarray            # D_pi(x) = (1/pi(x)) sum_{y ~ x} pi(y)
    deg_pi_max: float             # D_pi


class MarkovChain:
    """Validated finite Markov chain.

    Immutable after construction; all derived arrays are precomputed and must
    not be written to.  Safe for concurrent shared reads.
    """

    def __init__(self, q: np.ndarray, pi: np.ndarray | None = None,
                 states: list[str] | None = None):
        q = np.array(q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise NotStochastic(f"Q must be square, got shape {q.shape}")
        n = q.shape[0]
        if n == 0:
            raise InvalidParameters("empty chain")
        if states is None:
            states = [str(i) for i in range(n)]
        if len(states) != n or len(set(states)) != n:
            raise InvalidParameters("states must be distinct and match Q's size")

        if (q < 0).any():
            x, y = np.argwhere(q < 0)[0]
            raise NotStochastic(f"Q[{states[x]},{states[y]}] = {q[x, y]} < 0")
        row_sums = q.sum(axis=1)
        bad = np.abs(row_sums - 1.0) > VALIDATION_RTOL
        if bad.any():
            x = int(np.argmax(np.abs(row_sums - 1.0)))
            raise NotStochastic(
                f"row {states[x]} sums to {row_sums[x]!r} "
                f"(residual {row_sums[x] - 1.0:.3e})")

        adjacency = (q > 0.0)
        np.fill_diagonal(adjacency, False)
        n_comp, _ = connected_components(csr_matrix(adjacency), directed=False)
        if n_comp != 1:
            raise NotIrreducible(f"adjacency graph has {n_comp} components")

        if pi is None:
            pi = _stationary_vector(q)
        else:
            pi = np.array(pi, dtype=float)
            if pi.shape != (n,):
                raise InvalidParameters(f"pi must have shape ({n},)")
        if (pi <= 0).any() or abs(pi.sum() - 1.0) > VALIDATION_RTOL:
            raise InvalidParameters("pi must be strictly positive and sum to 1")

        # detailed balance: w(x,y) = Q(x,y) pi(x) symmetric
        w = q * pi[:, None]
        np.fill_diagonal(w, 0.0)
        resid = np.abs(w - w.T)
        scale = np.maximum(w, w.T)
        bad = resid > VALIDATION_RTOL * np.maximum(scale, 1e-300)
        if bad.any():
            x, y = np.argwhere(bad)[0]
            raise NotReversible(
                f"detailed balance fails for ({states[x]},{states[y]}): "
                f"Q(x,y)pi(x)={w[x, y]!r} vs Q(y,x)pi(y)={w[y, x]!r}")

        stat_resid = np.abs(pi @ q - pi)
        if (stat_resid > VALIDATION_RTOL * np.maximum(pi, 1e-300)).any():
            y = int(np.argmax(stat_resid))
            raise NotReversible(
                f"pi is not stationary at {states[y]} (residual {stat_resid[y]:.3e})")

        self._states = tuple(states)
        self._index = {s: i for i, s in enumerate(states)}
        self._q = q
        self._q.setflags(write=False)
        self._pi = pi
        self._pi.setflags(write=False)
        self._adjacency = adjacency
        self._adjacency.setflags(write=False)
        self._w = 0.5 * (w + w.T)   # exactly symmetric edge weights
        self._w.setflags(write=False)
        ex, ey = np.nonzero(adjacency)
        self._ex, self._ey = ex, ey
        self._qe = q[ex, ey]
        self._stats = None
        self._dist = None

    # -- basic accessors -------------------------------------------------

    @property
    def n_states(self) -> int:
        return len(self._states)

    @property
    def states(self) -> tuple[str, ...]:
        return self._states

    @property
    def q(self) -> np.ndarray:
        return self._q

    @property
    def pi(self) -> np.ndarray:
        return self._pi

    @property
    def adjacency(self) -> np.ndarray:
        return self._adjacency

    @property
    def w(self) -> np.ndarray:
        """Symmetric edge weights w(x,y) = Q(x,y) pi(x), zero diagonal."""
        return self._w

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All ordered adjacent pairs (ex, ey) with the kernel values Q[ex, ey]."""
        return self._ex, self._ey, self._qe

    def index(self, state) -> int:
        """Dense index of a state identifier (identifiers are strings)."""
        if isinstance(state, (int, np.integer)) and not isinstance(state, bool):
            if 0 <= state < self.n_states:
                return int(state)
            raise InvalidParameters(f"state index {state} out of range")
        try:
            return self._index[state]
        except KeyError:
            raise InvalidParameters(f"unknown state {state!r}") from None

    def stats(self) -> ChainStats:
        if self._stats is None:
            deg_w = self._q.sum(axis=1) - np.diag(self._q)
            with np.errstate(invalid="ignore"):
                deg_pi = (self._adjacency @ self._pi) / self._pi
            q_min = float(self._qe.min()) if self._qe.size else 0.0
            self._stats = ChainStats(
                q_min=q_min,
                pi_min=float(self._pi.min()),
                pi_max=float(self._pi.max()),
                deg_weighted=deg_w,
                deg_weighted_max=float(deg_w.max()),
                deg_pi=deg_pi,
                deg_pi_max=float(deg_pi.max()),
            )
        return self._stats

    def __repr__(self):
        return f"MarkovChain(n={self.n_states})"


def _stationary_vector(q: np.ndarray) -> np.ndarray:
    """Left Perron vector of Q via the singular system (Q^T - I) with an
    appended normalization row; exact (least squares) for small dense chains."""
    n = q.shape[0]
    a = np.vstack([q.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    return pi


def build_chain(q, pi=None, states=None) -> MarkovChain:
    """Validate and construct a chain from a row-stochastic kernel.

    When pi is omitted it is computed as the unique stationary vector.
    Raises NotStochastic / NotIrreducible / NotReversible naming the violated
    row or pair together with the residual.
    """
    return MarkovChain(q, pi=pi, states=states)


def distance_matrix(chain: MarkovChain) -> np.ndarray:
    """Combinatorial (shortest-path) distances of the adjacency graph."""
    if chain._dist is None:
        d = shortest_path(csr_matrix(chain.adjacency), method="D",
                          unweighted=True, directed=False)
        dist = d.astype(np.int64)
        dist.setflags(write=False)
        chain._dist = dist
    return chain._dist


# -- generators ----------------------------------------------------------

def srw_from_graph(adj: np.ndarray, states: list[str] | None = None) -> MarkovChain:
    """Simple random walk on an undirected graph: Q = A/deg, pi proportional to deg."""
    adj = np.asarray(adj, dtype=float)
    deg = adj.sum(axis=1)
    if (deg == 0).any():
        raise InvalidParameters("graph has an isolated vertex")
    q = adj / deg[:, None]
    pi = deg / deg.sum()
    return MarkovChain(q, pi=pi, states=states)


def hypercube(n_dim: int) -> MarkovChain:
    """Simple random walk on the n_dim-dimensional hypercube (2^n_dim states)."""
    if n_dim < 1:
        raise InvalidParameters("hypercube dimension must be >= 1")
    size = 1 << n_dim
    labels = [format(v, f"0{n_dim}b") for v in range(size)]
    adj = np.zeros((size, size))
    for v in range(size):
        for j in range(n_dim):
            adj[v, v ^ (1 << j)] = 1.0
    return srw_from_graph(adj, states=labels)


def cycle(n: int) -> MarkovChain:
    """Simple random walk on the cycle Z/nZ: Q(x, x-1) = Q(x, x+1) = 1/2."""
    if n < 3:
        raise InvalidParameters("cycle needs n >= 3")
    adj = np.zeros((n, n))
    for x in range(n):
        adj[x, (x + 1) % n] = 1.0
        adj[x, (x - 1) % n] = 1.0
    return srw_from_graph(adj)


def complete(n: int) -> MarkovChain:
    """Simple random walk on the complete graph K_n."""
    if n < 2:
        raise InvalidParameters("complete graph needs n >= 2")
    adj = np.ones((n, n)) - np.eye(n)
    return srw_from_graph(adj)


def path(n: int) -> MarkovChain:
    """Simple random walk on the path with n vertices."""
    if n < 2:
        raise InvalidParameters("path needs n >= 2")
    adj = np.zeros((n, n))
    for x in range(n - 1):
        adj[x, x + 1] = adj[x + 1, x] = 1.0
    return srw_from_graph(adj)


def random_regular(d: int, n: int, seed: int = 0) -> MarkovChain:
    """Simple random walk on a random connected d-regular graph (nd even, n > d)."""
    if d < 1 or n <= d or (n * d) % 2 != 0:
        raise InvalidParameters(f"need nd even and n > d >= 1, got d={d}, n={n}")
    for attempt in range(64):
        g = nx.random_regular_graph(d, n, seed=seed + attempt)
        if nx.is_connected(g):
            adj = nx.to_numpy_array(g, nodelist=sorted(g.nodes()))
            return srw_from_graph(adj)
    raise InvalidParameters(f"no connected {d}-regular graph found from seed {seed}")


def generate(spec: str, seed: int = 0) -> MarkovChain:
    """Build a standard chain from a spec string.

    Formats: ``hypercube:N``, ``cycle:n``, ``complete:n``, ``path:n``,
    ``random-regular:d:n`` (the seed argument applies to the random family).
    """
    parts = spec.split(":")
    kind = parts[0].replace("_", "-")
    try:
        args = [int(p) for p in parts[1:]]
    except ValueError:
        raise InvalidParameters(f"non-integer parameter in generator spec {spec!r}")
    makers = {"hypercube": hypercube, "cycle": cycle,
              "complete": complete, "path": path}
    if kind in makers:
        if len(args) != 1:
            raise InvalidParameters(f"{kind} takes one parameter, got {spec!r}")
        return makers[kind](args[0])
    if kind == "random-regular":
        if len(args) == 2:
            return random_regular(args[0], args[1], seed=seed)
        if len(args) == 3:
            return random_regular(args[0], args[1], seed=args[2])
        raise InvalidParameters(f"random-regular takes d:n[:seed], got {spec!r}")
    raise InvalidParameters(f"unknown generator kind {kind!r}")


# -- file formats ----------------------------------------------------------

def chain_to_json(chain: MarkovChain) -> dict:
    """JSON-serializable chain document: {"states": [...], "Q": [[...]], "pi": [...]}."""
    return {
        "states": list(chain.states),
        "Q": chain.q.tolist(),
        "pi": chain.pi.tolist(),
    }


def chain_from_json(doc) -> MarkovChain:
    """Build a chain from a JSON document (dict or JSON text)."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if "Q" not in doc:
        raise InvalidParameters('chain JSON must contain a "Q" matrix')
    states = doc.get("states")
    if states is not None:
        states = [str(s) for s in states]
    return build_chain(doc["Q"], pi=doc.get("pi"), states=states)


def chain_from_edgelist(text: str) -> MarkovChain:
    """Parse tab-separated lines ``u <TAB> v <TAB> weight`` as symmetric weights.

    The chain is the weighted random walk Q(x,y) = w(x,y)/sum_z w(x,z) with
    pi proportional to the weighted degree.
    """
    weights: dict[tuple[str, str], float] = {}
    order: list[str] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise InvalidParameters(f"edge list line {ln}: expected 'u<TAB>v<TAB>w'")
        u, v, wtxt = fields
        try:
            wval = float(wtxt)
        except ValueError:
            raise InvalidParameters(f"edge list line {ln}: bad weight {wtxt!r}")
        if wval < 0:
            raise InvalidParameters(f"edge list line {ln}: negative weight")
        if u == v:
            raise InvalidParameters(f"edge list line {ln}: self loops not allowed")
        for s in (u, v):
            if s not in weights and s not in order:
                order.append(s)
        key = (u, v) if u <= v else (v, u)
        weights[key] = weights.get(key, 0.0) + wval
    if not order:
        raise InvalidParameters("empty edge list")
    idx = {s: i for i, s in enumerate(order)}
    n = len(order)
    w = np.zeros((n, n))
    for (u, v), wval in weights.items():
        w[idx[u], idx[v]] += wval
        w[idx[v], idx[u]] += wval
    deg = w.sum(axis=1)
    if (deg == 0).any():
        raise InvalidParameters("edge list leaves a vertex with zero total weight")
    q = w / deg[:, None]
    pi = deg / deg.sum()
    return MarkovChain(q, pi=pi, states=order)
