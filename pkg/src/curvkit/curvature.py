"""Curvature solvers: best constant K with m - K n >= 0 over a form pair.

The optimal constant of the curvature-dimension inequality for a fixed
density is sup{K : m - K n is positive semidefinite}.  Since n is PSD with a
nontrivial null space (always containing constants, more for Dirac
densities), the supremum is computed through a Schur reduction onto the
n-positive subspace and independently confirmed by bisection with a PSD test.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.optimize

from .chain import MarkovChain, distance_matrix
from .errors import DomainError, NumericalFailure
from .gamma import assemble_forms, cd_quadratic, dirac, validate_density
from .heat import spectral_decompose
from .means import ARITHMETIC, LOGARITHMIC, get_mean

NEG_INFINITY = float("-inf")
POS_INFINITY = float("inf")

#: eigenvalues of n below this relative threshold count as null directions
NULL_REL_TOL = 1e-12
#: relative eigenvalue floor of the PSD test used by the bisection route
PSD_REL_FLOOR = 1e-11
#: |K| cap beyond which the bisection declares the value unbounded
BISECT_CAP = 1e6
#: pencil/bisection agreement tolerance
AGREE_TOL = 1e-8
#: minimal-eigenvalue gap below which the analytic gradient falls back to
#: finite differences of the curvature value itself
GRAD_GAP_TOL = 1e-7


@dataclass
class CurvatureResult:
    """Curvature value with its witness function and solver diagnostics."""

    value: float
    witness: np.ndarray | None
    method: str
    bracket: tuple[float, float] | None
    iterations: int
    null_dim: int
    bisection_value: float | None = None
    gap: float | None = None          # distance of the minimal pencil eigenvalue
                                      # to the next one (degeneracy indicator)


def _spectral_norm(a: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(a)).max()) if a.size else 0.0


def _is_psd(a: np.ndarray, scale: float | None = None) -> bool:
    if a.size == 0:
        return True
    evals = np.linalg.eigvalsh(a)
    if scale is None:
        scale = max(1.0, float(np.abs(evals).max()))
    return bool(evals.min() >= -PSD_REL_FLOOR * scale)


def _pencil(m: np.ndarray, n: np.ndarray):
    """sup{K : m - K n >= 0} via Schur reduction on the null space of n.

    Returns (value, witness, null_dim, gap).  The witness f satisfies
    f' (m - K n) f ~ 0 with f' n f > 0 whenever the value is finite.
    """
    dim = m.shape[0]
    evals, vecs = np.linalg.eigh(n)
    n_scale = max(float(evals.max()), 0.0)
    null_mask = evals <= NULL_REL_TOL * max(n_scale, 1e-300)
    u = vecs[:, null_mask]
    v = vecs[:, ~null_mask]
    nvv = np.diag(evals[~null_mask])
    null_dim = int(null_mask.sum())
    m_scale = max(1.0, _spectral_norm(m))

    if v.shape[1] == 0:
        # n vanishes: K unbounded above iff m itself is PSD
        value = POS_INFINITY if _is_psd(m, m_scale) else NEG_INFINITY
        return value, None, null_dim, None

    muu = u.T @ m @ u
    muv = u.T @ m @ v
    mvv = v.T @ m @ v

    if null_dim:
        uevals, uvecs = np.linalg.eigh(muu)
        if uevals.min() < -1e-10 * m_scale:
            return NEG_INFINITY, None, null_dim, None
        pos = uevals > 1e-10 * max(m_scale, float(np.abs(uevals).max()))
        # range coupling: rows of muv must lie in the range of muu
        resid = muv - uvecs[:, pos] @ (uvecs[:, pos].T @ muv)
        if np.abs(resid).max() > 1e-8 * m_scale:
            return NEG_INFINITY, None, null_dim, None
        pinv = uvecs[:, pos] @ np.diag(1.0 / uevals[pos]) @ uvecs[:, pos].T
        schur = mvv - muv.T @ pinv @ muv
        lift = -pinv @ muv
    else:
        schur = mvv
        lift = np.zeros((0, v.shape[1]))

    schur = 0.5 * (schur + schur.T)
    pvals, pvecs = sla.eigh(schur, nvv)
    k = float(pvals[0])
    gap = float(pvals[1] - pvals[0]) if len(pvals) > 1 else POS_INFINITY
    y = pvecs[:, 0]
    witness = v @ y + (u @ (lift @ y) if null_dim else 0.0)
    nmass = float(witness @ n @ witness)
    if nmass > 0:
        witness = witness / np.sqrt(nmass)
    return k, witness, null_dim, gap


def _bisect(m: np.ndarray, n: np.ndarray, lo: float, hi: float):
    """sup{K : m - K n >= 0} by bracketing and bisection on the PSD test.

    The eigenvalue floor stays anchored to the fixed problem scale (plus a
    small |K|-proportional rounding allowance) so that spurious acceptance
    at huge |K| cannot mask an unbounded pencil.
    """
    m_norm = _spectral_norm(m)
    n_norm = _spectral_norm(n)
    base = max(1.0, m_norm, n_norm)

    def psd_at(k):
        floor = PSD_REL_FLOOR * base + 1e-13 * abs(k) * n_norm
        return bool(np.linalg.eigvalsh(m - k * n).min() >= -floor)

    iters = 0
    while psd_at(hi):
        lo, hi = hi, 2.0 * abs(hi) if hi > 0 else 4.0
        iters += 1
        if hi > BISECT_CAP:
            return POS_INFINITY, iters, (lo, hi)
    while not psd_at(lo):
        hi, lo = lo, -2.0 * abs(lo) if lo < 0 else -4.0
        iters += 1
        if lo < -BISECT_CAP:
            return NEG_INFINITY, iters, (lo, hi)
    bracket = (lo, hi)
    while hi - lo > 1e-9 and iters < 256:
        mid = 0.5 * (lo + hi)
        if psd_at(mid):
            lo = mid
        else:
            hi = mid
        iters += 1
    return lo, iters, bracket


def solve_pencil(m: np.ndarray, n: np.ndarray, q_min: float = 1.0,
                 confirm: bool = True) -> CurvatureResult:
    """Solve sup{K : m - K n >= 0} with optional bisection confirmation."""
    k, witness, null_dim, gap = _pencil(m, n)
    result = CurvatureResult(value=k, witness=witness, method="pencil",
                             bracket=None, iterations=0, null_dim=null_dim,
                             gap=gap)
    if confirm:
        lo0 = -4.0 / q_min if q_min > 0 else -4.0
        kb, iters, bracket = _bisect(m, n, lo0, 4.0)
        result.bisection_value = kb
        result.bracket = bracket
        result.iterations = iters
        both_finite = np.isfinite(k) and np.isfinite(kb)
        if both_finite and abs(k - kb) > AGREE_TOL * max(1.0, abs(k)):
            raise NumericalFailure(
                f"pencil K={k!r} and bisection K={kb!r} disagree beyond {AGREE_TOL}")
        if np.isfinite(k) != np.isfinite(kb) and not (k == kb):
            raise NumericalFailure(
                f"pencil K={k!r} and bisection K={kb!r} disagree on finiteness")
    if np.isfinite(k) and witness is not None:
        a = m - k * n
        floor = 1e-9 * (_spectral_norm(m) + abs(k) * _spectral_norm(n) + 1.0)
        if np.linalg.eigvalsh(a).min() < -floor:
            raise NumericalFailure("certificate m - K n lost positivity")
    return result


def curvature_of_measure(chain: MarkovChain, mean, rho, dim,
                         confirm: bool = True) -> CurvatureResult:
    """Optimal curvature constant of a fixed density at dimension dim."""
    mean = get_mean(mean)
    rho = validate_density(chain, mean, rho)
    if chain.n_states == 1:
        warnings.warn("single-state chain: curvature is vacuously +inf")
        return CurvatureResult(POS_INFINITY, None, "pencil", None, 0, 1)
    fp = assemble_forms(chain, mean, rho, dim)
    return solve_pencil(fp.m, fp.n, q_min=chain.stats().q_min, confirm=confirm)


def bakry_emery_vertex(chain: MarkovChain, state, dim,
                       confirm: bool = True) -> CurvatureResult:
    """Vertex curvature: the Dirac density under the arithmetic mean.

    The forms vanish outside the 2-ball of the vertex, so the pencil is
    solved on that ball and the witness re-embedded.
    """
    ix = chain.index(state)
    rho = dirac(chain, ix)
    fp = assemble_forms(chain, ARITHMETIC, rho, dim)
    ball = np.flatnonzero(distance_matrix(chain)[ix] <= 2)
    m = fp.m[np.ix_(ball, ball)]
    n = fp.n[np.ix_(ball, ball)]
    res = solve_pencil(m, n, q_min=chain.stats().q_min, confirm=confirm)
    if res.witness is not None:
        full = np.zeros(chain.n_states)
        full[ball] = res.witness
        res.witness = full
    return res


def bakry_emery_global(chain: MarkovChain, dim,
                       confirm: bool = False) -> tuple[float, str]:
    """Global curvature: minimum of the vertex curvatures (arithmetic mean)."""
    best = POS_INFINITY
    best_state = chain.states[0]
    for state in chain.states:
        k = bakry_emery_vertex(chain, state, dim, confirm=confirm).value
        if k < best:
            best, best_state = k, state
    return best, best_state


def lambda1(chain: MarkovChain) -> float:
    """Smallest positive eigenvalue of minus the Laplacian."""
    return float(spectral_decompose(chain).eigenvalues[1])


def curvature_grad_rho(chain: MarkovChain, mean, rho, dim) -> tuple[float, np.ndarray]:
    """Value and gradient of rho -> K_dim(rho).

    Differentiates the minimal pencil eigenvalue through its witness
    (first-order eigenvalue sensitivity); the per-coordinate derivatives of
    the frozen-witness quadratic forms are central differences.  Near
    eigenvalue degeneracy the whole value is finite-differenced instead.
    """
    mean = get_mean(mean)
    rho = validate_density(chain, mean, rho)

    def value_at(r):
        fp = assemble_forms(chain, mean, r, dim)
        return _pencil(fp.m, fp.n)

    k, witness, _, gap = value_at(rho)
    if not np.isfinite(k):
        raise NumericalFailure("curvature gradient undefined at K = -inf")
    grad = np.zeros(chain.n_states)
    if gap is not None and gap >= GRAD_GAP_TOL and witness is not None:
        nmass = cd_quadratic(chain, mean, rho, dim, witness)[1]
        for i in range(chain.n_states):
            h = min(6e-6 * max(1.0, rho[i]), 0.5 * rho[i]) if rho[i] > 0 else 6e-6
            rp = rho.copy(); rp[i] += h
            rm = rho.copy(); rm[i] -= h
            mp_, np_ = cd_quadratic(chain, mean, rp, dim, witness)
            mm_, nm_ = cd_quadratic(chain, mean, rm, dim, witness)
            dm = (mp_ - mm_) / (2 * h)
            dn = (np_ - nm_) / (2 * h)
            grad[i] = (dm - k * dn) / nmass
    else:
        for i in range(chain.n_states):
            h = min(1e-6 * max(1.0, rho[i]), 0.5 * rho[i]) if rho[i] > 0 else 1e-6
            rp = rho.copy(); rp[i] += h
            rm = rho.copy(); rm[i] -= h
            grad[i] = (value_at(rp)[0] - value_at(rm)[0]) / (2 * h)
    return k, grad


@dataclass
class EntropicEstimate:
    """Best upper bound on the global curvature found by multi-start descent.

    Every evaluated density yields a valid upper bound on the chain
    curvature; k_hat is the least one seen.  The global infimum is NOT
    certified: certified_nonnegative is a heuristic flag only.
    """

    k_hat: float
    rho_star: np.ndarray
    starts: int
    per_start: list[tuple[float, bool]] = field(default_factory=list)
    certified_nonnegative: bool = False


def entropic_curvature_estimate(chain: MarkovChain, dim, starts: int = 32,
                                seed: int = 0, tol: float = 1e-8,
                                max_iters: int = 500,
                                mean=LOGARITHMIC) -> EntropicEstimate:
    """Minimize K_dim(rho) over the open probability simplex.

    Densities are parameterized as rho = exp(u)/<exp(u), 1>_pi so every
    iterate stays strictly positive and normalized.  Starts: the constant
    density, smoothed Dirac bumps (at most 8), then Dirichlet-random
    densities.  Runs are sequential in index order, so results are
    reproducible for a fixed (seed, starts).
    """
    mean = get_mean(mean)
    if mean.domain_class != "open":
        raise DomainError("the entropic optimizer needs an open-domain mean")
    n = chain.n_states
    pi = chain.pi

    def rho_of(u):
        e = np.exp(u - u.max())
        return e / float(np.dot(e, pi))

    start_rhos = [np.ones(n)]
    eps = 0.05
    for ix in range(min(n, 8)):
        rho = np.full(n, eps)
        rho[ix] += (1.0 - eps) / pi[ix]
        start_rhos.append(rho)
    while len(start_rhos) < starts:
        rng = np.random.default_rng([seed, len(start_rhos)])
        w = rng.dirichlet(np.ones(n))
        start_rhos.append(np.maximum(w / pi, 1e-9))
    start_rhos = start_rhos[:starts]

    best_k = POS_INFINITY
    best_rho = np.ones(n)
    per_start: list[tuple[float, bool]] = []

    for rho0 in start_rhos:
        local_best = [POS_INFINITY, None]

        def fun_and_grad(u):
            rho = rho_of(u)
            k, g_rho = curvature_grad_rho(chain, mean, rho, dim)
            if k < local_best[0]:
                local_best[0] = k
                local_best[1] = rho.copy()
            # chain rule through the normalized exponential map
            g_u = rho * (g_rho - pi * float(np.dot(g_rho, rho)))
            return k, g_u

        u0 = np.log(rho0)
        try:
            res = scipy.optimize.minimize(
                fun_and_grad, u0, jac=True, method="L-BFGS-B",
                bounds=[(-30.0, 30.0)] * n,
                options={"maxiter": max_iters, "ftol": tol, "gtol": 1e-10})
            converged = bool(res.success)
        except NumericalFailure:
            converged = False
        per_start.append((local_best[0], converged))
        if local_best[0] < best_k:
            best_k = local_best[0]
            best_rho = local_best[1]

    best_rho = np.maximum(best_rho, 1e-300)
    best_rho = best_rho / float(np.dot(best_rho, pi))
    return EntropicEstimate(
        k_hat=best_k, rho_star=best_rho, starts=starts, per_start=per_start,
        certified_nonnegative=bool(best_k >= -1e-6))


@dataclass(frozen=True)
class LichnerowiczResult:
    lambda1: float
    k_lower: float
    sharp: bool
    heuristic: bool          # True when k_lower comes from the optimizer


def lichnerowicz_check(chain: MarkovChain, mean=ARITHMETIC,
                       **optimizer_opts) -> LichnerowiczResult:
    """Compare the spectral gap with the curvature lower bound.

    The gap always dominates the curvature; equality (within 1e-6) makes the
    chain sharp.  With the arithmetic mean the curvature is the exact vertex
    minimum; otherwise it is the optimizer's heuristic upper estimate.
    """
    mean = get_mean(mean)
    lam = lambda1(chain)
    if mean.kind == "arithmetic":
        k, _ = bakry_emery_global(chain, POS_INFINITY)
        heuristic = False
    else:
        opts = {"starts": 16, "seed": 0}
        opts.update(optimizer_opts)
        k = entropic_curvature_estimate(chain, POS_INFINITY, mean=mean,
                                        **opts).k_hat
        heuristic = True
    return LichnerowiczResult(lambda1=lam, k_lower=k,
                              sharp=bool(lam - k <= 1e-6), heuristic=heuristic)


@dataclass(frozen=True)
class CurvatureProfile:
    """Samples of K as a function of s = 1/dim (concave: K is an infimum of
    affine functions of s)."""

    points: list[tuple[float, float]]       # (1/dim, K), sorted by 1/dim
    midpoint_concave: bool


def curvature_profile(chain: MarkovChain, mean, rho, dim_grid,
                      confirm: bool = False) -> CurvatureProfile:
    """Evaluate the curvature of a density across a dimension grid."""
    pts = []
    for dim in dim_grid:
        s = 0.0 if np.isinf(dim) else 1.0 / float(dim)
        k = curvature_of_measure(chain, mean, rho, dim, confirm=confirm).value
        pts.append((s, k))
    pts.sort(key=lambda p: p[0])
    ok = True
    for i in range(1, len(pts) - 1):
        s0, k0 = pts[i - 1]
        s1, k1 = pts[i]
        s2, k2 = pts[i + 1]
        if s2 > s0:
            lam = (s1 - s0) / (s2 - s0)
            if k1 < (1 - lam) * k0 + lam * k2 - 1e-9 * max(1.0, abs(k1)):
                ok = False
    return CurvatureProfile(points=pts, midpoint_concave=ok)
