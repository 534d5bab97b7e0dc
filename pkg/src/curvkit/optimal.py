"""Optimal measures and sets for the arithmetic mean.

A set A is optimal at dimension dim when some f0 kills every pointwise form
q_x(f) = (Gamma2 f - (1/dim)(Delta f)^2 - K Gamma f)(x), x in A, at the global
curvature K, while Gamma f0 > 0 throughout A.  Since each q_x is PSD at the
global K, this is a null-space intersection problem: optimal sets are
downward closed and form a simplicial complex on the minimal-curvature
vertices.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .chain import MarkovChain, distance_matrix
from .curvature import bakry_emery_vertex
from .errors import InvalidParameters, TooLarge
from .gamma import assemble_forms, dirac
from .means import ARITHMETIC

#: singular-value cutoff (relative to the largest) for null spaces of the
#: summed pointwise forms; absorbs the finite accuracy of the global K
KERNEL_REL_TOL = 1e-8
#: a Gram matrix of Gamma on the kernel below this scale counts as zero
GRAM_REL_TOL = 1e-10
#: tolerance for membership in the minimal-curvature vertex set
X0_REL_TOL = 1e-8


@dataclass
class OptimalityCertificate:
    is_optimal: bool
    witness: np.ndarray | None       # f0 with Gamma f0 > 0 on the set, iff optimal
    kernel_dim: int
    failing_vertex: str | None       # vertex where Gamma must vanish on the kernel


@dataclass
class OptimalComplex:
    facets: list[tuple[str, ...]]    # maximal optimal sets, lexicographic
    dimension: int                   # max |facet| - 1
    zero_cells: tuple[str, ...]      # minimal-curvature vertices


class _PointwiseForms:
    """Per-vertex matrices of the pointwise curvature forms at the global K."""

    def __init__(self, chain: MarkovChain, dim):
        self.chain = chain
        self.dim = float(dim)
        per_vertex = [bakry_emery_vertex(chain, s, dim, confirm=False).value
                      for s in chain.states]
        self.vertex_curv = np.array(per_vertex)
        self.k_global = float(self.vertex_curv.min())
        self.q_mats = []
        self.gamma_mats = []
        self.form_scale = 0.0
        for state in chain.states:
            fp = assemble_forms(chain, ARITHMETIC, dirac(chain, state), dim)
            self.q_mats.append(fp.m - self.k_global * fp.n)
            self.gamma_mats.append(fp.n)       # f' n f = Gamma f(x)
            self.form_scale = max(
                self.form_scale,
                float(np.abs(fp.m).max() + abs(self.k_global) * np.abs(fp.n).max()))

    def zero_cells(self):
        tol = X0_REL_TOL * max(1.0, abs(self.k_global))
        return tuple(s for s, k in zip(self.chain.states, self.vertex_curv)
                     if k - self.k_global <= tol)


def _kernel_basis(mats: list[np.ndarray], form_scale: float) -> np.ndarray:
    total = np.sum(mats, axis=0)
    total = 0.5 * (total + total.T)
    evals, vecs = np.linalg.eigh(total)
    # the absolute term covers forms that cancel to rounding noise
    # (the summed matrix can be numerically zero on sharp chains)
    cutoff = KERNEL_REL_TOL * float(np.abs(evals).max()) \
        + 1e-12 * form_scale * len(mats)
    return vecs[:, evals <= cutoff]


def _positive_combination(grams: list[np.ndarray], basis: np.ndarray,
                          rng: np.random.Generator):
    """A kernel vector with strictly positive value in every PSD Gram form.

    Random draws are generically sufficient (each Gram's zero set is a
    proper subspace); the fallback scans Vandermonde coefficient vectors,
    which must succeed because a polynomial c(t)' G c(t) that vanishes at
    more points than its degree forces G = 0 on the kernel.
    """
    dim = basis.shape[1]
    floors = [GRAM_REL_TOL * max(1.0, float(np.abs(g).max())) for g in grams]

    def good(c):
        c = c / np.linalg.norm(c)
        return all(float(c @ g @ c) > floor for g, floor in zip(grams, floors)), c

    for _ in range(100):
        ok, c = good(rng.standard_normal(dim))
        if ok:
            return c
    for t in range(1, 2 * dim * len(grams) + 2):
        ok, c = good(np.array([float(t) ** i for i in range(dim)]))
        if ok:
            return c
    return None


def is_optimal_set(chain: MarkovChain, states, dim,
                   forms: _PointwiseForms | None = None,
                   seed: int = 0) -> OptimalityCertificate:
    """Decide optimality of a vertex set at dimension dim (arithmetic mean)."""
    idx = [chain.index(s) for s in states]
    if not idx:
        raise InvalidParameters("the empty set has no optimality certificate")
    if forms is None:
        forms = _PointwiseForms(chain, dim)
    basis = _kernel_basis([forms.q_mats[i] for i in idx], forms.form_scale)
    kernel_dim = basis.shape[1]
    if kernel_dim == 0:
        return OptimalityCertificate(False, None, 0, chain.states[idx[0]])
    grams = []
    for i in idx:
        g = basis.T @ forms.gamma_mats[i] @ basis
        if np.abs(g).max() <= GRAM_REL_TOL * max(1.0, float(np.abs(forms.gamma_mats[i]).max())):
            # Gamma vanishes identically on the kernel at this vertex
            return OptimalityCertificate(False, None, kernel_dim, chain.states[i])
        grams.append(0.5 * (g + g.T))
    rng = np.random.default_rng(seed)
    c = _positive_combination(grams, basis, rng)
    if c is None:        # pragma: no cover - Vandermonde fallback is exhaustive
        return OptimalityCertificate(False, None, kernel_dim, None)
    witness = basis @ c
    witness /= np.linalg.norm(witness)
    return OptimalityCertificate(True, witness, kernel_dim, None)


def optimal_complex(chain: MarkovChain, dim, max_size: int = 24) -> OptimalComplex:
    """Enumerate the maximal optimal sets by downward search from the
    minimal-curvature vertices, pruning subsets of known facets."""
    if chain.n_states > max_size:
        raise TooLarge(f"optimal-set enumeration capped at {max_size} states")
    forms = _PointwiseForms(chain, dim)
    x0 = forms.zero_cells()
    facets: list[frozenset] = []
    for size in range(len(x0), 0, -1):
        for combo in combinations(x0, size):
            cand = frozenset(combo)
            if any(cand <= f for f in facets):
                continue
            if is_optimal_set(chain, combo, dim, forms=forms).is_optimal:
                facets.append(cand)
    facet_tuples = sorted(tuple(sorted(f, key=chain.index)) for f in facets)
    dimension = max((len(f) - 1 for f in facet_tuples), default=-1)
    return OptimalComplex(facets=facet_tuples, dimension=dimension,
                          zero_cells=x0)


def check_equilibrium_optimality(chain: MarkovChain, dim=np.inf) -> bool:
    """Whether the full vertex set (support of the constant density) is optimal."""
    return is_optimal_set(chain, chain.states, dim).is_optimal


@dataclass
class UnionReport:
    distance: int
    precondition_met: bool
    union_optimal: bool | None


def check_union_proposition(chain: MarkovChain, a0, a1, dim) -> UnionReport:
    """Union of two optimal sets at combinatorial distance >= 5.

    When the distance precondition fails the union is reported without any
    optimality claim (no assertion made).
    """
    i0 = [chain.index(s) for s in a0]
    i1 = [chain.index(s) for s in a1]
    dist = distance_matrix(chain)
    d = int(min(dist[i, j] for i in i0 for j in i1))
    if d < 5:
        return UnionReport(distance=d, precondition_met=False, union_optimal=None)
    cert = is_optimal_set(chain, tuple(a0) + tuple(s for s in a1 if s not in a0), dim)
    return UnionReport(distance=d, precondition_met=True,
                       union_optimal=cert.is_optimal)
