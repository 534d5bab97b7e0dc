"""Heat semigroup via spectral decomposition, mixing time, and the
semigroup-form inequality verifiers.

Reversibility makes the pi-symmetrized generator symmetric, so the semigroup
is exact (no time stepping): P_t f = sum_k exp(-lam_k t) <f, phi_k>_pi phi_k
with a pi-orthonormal eigenbasis phi_k.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .chain import MarkovChain, distance_matrix
from .errors import EpsTooLarge, NegativeTime, PreconditionHeuristic
from .gamma import a_form, func_inner, laplacian, laplacian_matrix
from .means import get_mean


@dataclass(frozen=True)
class HeatSystem:
    """Spectral data of minus the Laplacian: 0 = lam_0 < lam_1 <= ..."""

    chain: MarkovChain
    eigenvalues: np.ndarray
    basis: np.ndarray           # columns phi_k, pi-orthonormal, phi_0 constant
    sqrt_pi: np.ndarray


def spectral_decompose(chain: MarkovChain) -> HeatSystem:
    """Eigendecomposition of the symmetrized generator diag(sqrt pi)(I-Q)diag(1/sqrt pi)."""
    sqrt_pi = np.sqrt(chain.pi)
    sym = (np.eye(chain.n_states) - chain.q) * (sqrt_pi[:, None] / sqrt_pi[None, :])
    sym = 0.5 * (sym + sym.T)
    evals, vecs = np.linalg.eigh(sym)
    basis = vecs / sqrt_pi[:, None]
    if basis[0, 0] < 0:
        basis[:, 0] = -basis[:, 0]
    return HeatSystem(chain=chain, eigenvalues=evals, basis=basis, sqrt_pi=sqrt_pi)


def heat_operator(sys: HeatSystem, t: float) -> np.ndarray:
    """Matrix of P_t acting on functions (row x: P_t f(x))."""
    if t < 0:
        raise NegativeTime(f"heat semigroup needs t >= 0, got {t}")
    phi = sys.basis
    damp = np.exp(-sys.eigenvalues * t)
    return (phi * damp) @ (phi.T * sys.chain.pi)


def heat_apply(sys: HeatSystem, t: float, f) -> np.ndarray:
    """P_t f."""
    if t < 0:
        raise NegativeTime(f"heat semigroup needs t >= 0, got {t}")
    f = np.asarray(f, dtype=float)
    coeff = sys.basis.T @ (sys.chain.pi * f)
    return sys.basis @ (np.exp(-sys.eigenvalues * t) * coeff)


def heat_kernel(sys: HeatSystem, t: float, x=None, y=None):
    """Heat kernel p_t(x, y) = sum_k exp(-lam_k t) phi_k(x) phi_k(y).

    Symmetric; sums to one against pi in either argument.  Without x, y the
    full matrix is returned.
    """
    if t < 0:
        raise NegativeTime(f"heat semigroup needs t >= 0, got {t}")
    phi = sys.basis
    p = (phi * np.exp(-sys.eigenvalues * t)) @ phi.T
    if x is None and y is None:
        return p
    ix = sys.chain.index(x)
    iy = sys.chain.index(y)
    return float(p[ix, iy])


def l1_distance_from_equilibrium(sys: HeatSystem, t: float) -> float:
    """sum_{x,y} pi(x) pi(y) |p_t(x,y) - 1| (monotone nonincreasing in t)."""
    p = heat_kernel(sys, t)
    pi = sys.chain.pi
    return float(np.sum(np.abs(p - 1.0) * pi[:, None] * pi[None, :]))


def avg_mixing_time(sys: HeatSystem, eps: float) -> float:
    """First time the doubly pi-weighted L1 distance to equilibrium is <= eps.

    Bracketing by doubling followed by bisection to 1e-10 in t; the
    monotonicity of the distance is asserted on the evaluation trace.
    """
    if eps <= 0:
        raise EpsTooLarge("eps must be positive")
    trace: list[tuple[float, float]] = []

    def phi(t):
        v = l1_distance_from_equilibrium(sys, t)
        trace.append((t, v))
        return v

    if phi(0.0) <= eps:
        raise EpsTooLarge(f"distance at t=0 is already <= eps={eps}")
    lo, hi = 0.0, 1.0
    while phi(hi) > eps:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise EpsTooLarge("mixing threshold not reached by t = 1e12")
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if phi(mid) > eps:
            lo = mid
        else:
            hi = mid
    trace.sort(key=lambda p: p[0])
    for (t0, v0), (t1, v1) in zip(trace, trace[1:]):
        if v1 > v0 + 1e-12 * max(1.0, v0):
            raise EpsTooLarge(f"distance trace not monotone at t={t1}")
    return hi


# -- semigroup-form inequality verifiers -----------------------------------

@dataclass
class VerifyReport:
    """Worst normalized residual of an inequality over randomized trials.

    Residuals are (lhs - rhs) / (|lhs| + |rhs|); negative means violated.
    """

    inequality: str
    trials: int
    worst_residual: float
    witness: dict = field(default_factory=dict)
    violations: int = 0

    def to_dict(self):
        w = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
             for k, v in self.witness.items()}
        return {"inequality": self.inequality, "trials": self.trials,
                "worst_residual": self.worst_residual, "witness": w,
                "violations": self.violations}


def _random_density(chain: MarkovChain, rng, floor: float = 1e-9) -> np.ndarray:
    """Dirichlet(1) mass converted to a density, floored away from zero."""
    w = rng.dirichlet(np.ones(chain.n_states))
    rho = np.maximum(w / chain.pi, floor)
    return rho / float(np.dot(rho, chain.pi))


def _grad_coeff(k: float, dim: float, t: float) -> float:
    """(1 - exp(-2Kt)) / (K dim), with the K -> 0 limit 2t/dim."""
    if np.isinf(dim):
        return 0.0
    if k == 0.0:
        return 2.0 * t / dim
    return -math.expm1(-2.0 * k * t) / (k * dim)


def _residual_scale(chain: MarkovChain, lhs: float, rhs: float, *fields) -> float:
    """|lhs| + |rhs| floored by the rounding scale of the input functions.

    Without the floor, triples whose two sides cancel exactly (constant f,
    t = 0) normalize rounding noise up to order one.
    """
    noise = sum(float(np.abs(f).max()) ** 2 for f in fields)
    return max(abs(lhs) + abs(rhs), 1e-13 * noise, 1e-300)


def _gradient_estimate_parts(chain: MarkovChain, sys: HeatSystem, mean,
                             k: float, dim: float, rho, f, t: float):
    """(lhs, rhs, aggregate) of the gradient estimate at one triple.

    The aggregate is the unsigned sum of all constituent terms; it bounds
    the rounding noise of the two (possibly cancelling) sides.
    """
    rho_t = heat_apply(sys, t, rho)
    f_t = heat_apply(sys, t, f)
    term1 = math.exp(-2.0 * k * t) * a_form(chain, mean, rho_t, f)
    term2 = a_form(chain, mean, rho, f_t)
    lf = laplacian(chain, f_t)
    rhs = _grad_coeff(k, dim, t) * func_inner(chain, rho, lf * lf)
    return term1 - term2, rhs, abs(term1) + abs(term2) + abs(rhs)


def gradient_estimate_residual(chain: MarkovChain, sys: HeatSystem, mean,
                               k: float, dim: float, rho, f, t: float) -> float:
    """Normalized residual of
    exp(-2Kt) A_{P_t rho}(f) - A_rho(P_t f) >= coeff * <rho, (Delta P_t f)^2>_pi."""
    lhs, rhs, _ = _gradient_estimate_parts(chain, sys, mean, k, dim, rho, f, t)
    return (lhs - rhs) / _residual_scale(chain, lhs, rhs, f)


def verify_gradient_estimate(chain: MarkovChain, mean, k: float, dim,
                             trials: int = 50, t_grid=(0.1, 1.0, 10.0),
                             seed: int = 0) -> VerifyReport:
    """Check the semigroup gradient estimate over random (rho, f, t)."""
    mean = get_mean(mean)
    sys = spectral_decompose(chain)
    rng = np.random.default_rng(seed)
    dim = float(dim)
    worst = math.inf
    witness = {}
    violations = 0
    for _ in range(trials):
        rho = _random_density(chain, rng)
        f = rng.standard_normal(chain.n_states)
        for t in t_grid:
            r = gradient_estimate_residual(chain, sys, mean, k, dim, rho, f, t)
            if r < worst:
                worst = r
                witness = {"rho": rho.copy(), "f": f.copy(), "t": float(t)}
            if r < -1e-9:
                violations += 1
    return VerifyReport("gradient_estimate", trials, worst, witness, violations)


def _gradient_estimate_f_matrix(chain: MarkovChain, sys: HeatSystem, mean,
                                k: float, dim: float, rho, t: float) -> np.ndarray:
    """Quadratic form H with f' H f = lhs - rhs of the gradient estimate.

    A negative eigenvalue of H exhibits a violating f for the given (rho, t).
    """
    pt = heat_operator(sys, t)
    rho_t = heat_apply(sys, t, rho)
    ex, ey, qe = chain.edges
    n = chain.n_states

    def energy_matrix(dens):
        th = np.asarray(get_mean(mean).value(dens[ex], dens[ey]), float)
        c = np.zeros((n, n))
        c[ex, ey] = th * qe * chain.pi[ex]
        c = 0.5 * (c + c.T)
        return np.diag(c.sum(axis=1)) - c

    lap = laplacian_matrix(chain)
    h = math.exp(-2.0 * k * t) * energy_matrix(rho_t) \
        - pt.T @ energy_matrix(rho) @ pt
    coeff = _grad_coeff(k, dim, t)
    if coeff:
        lp = lap @ pt
        h = h - coeff * (lp.T @ np.diag(rho * chain.pi) @ lp)
    return 0.5 * (h + h.T)


@dataclass
class ProbeResult:
    found_violation: bool
    residual: float
    witness: dict


def sharpness_probe(chain: MarkovChain, mean, k: float, dim,
                    trials: int = 40, iters: int = 200,
                    seed: int = 0) -> ProbeResult:
    """Search for a violation of the gradient estimate at a candidate K.

    Coordinate descent over (rho, f, t): the f-block is minimized exactly
    (the residual is quadratic in f), t by scanning a log grid, rho by
    greedy multiplicative perturbations.  Seeds are the worst random sample
    plus smoothed Dirac densities, because violations of a barely-too-large
    K can hide arbitrarily close to the boundary of the density simplex.
    """
    mean = get_mean(mean)
    sys = spectral_decompose(chain)
    rng = np.random.default_rng(seed)
    dim = float(dim)

    report = verify_gradient_estimate(chain, mean, k, dim, trials=trials,
                                      t_grid=(1e-3, 1e-2, 0.1, 1.0), seed=seed)

    def score(cand, f, tc):
        # normalize by the unsigned aggregate of terms: a violation has to
        # clear the cancellation noise of the sides, not hide inside it
        lhs, rhs, agg = _gradient_estimate_parts(chain, sys, mean, k, dim,
                                                 cand, f, tc)
        noise = 1e-13 * float(np.abs(f).max()) ** 2
        return (lhs - rhs) / max(agg, noise, 1e-300)

    # both sides of the estimate are invariant under f -> f + const, so the
    # search lives in the complement of constants (whose rounding-level
    # kernel direction would otherwise win every eigendecomposition)
    n = chain.n_states
    basis = np.linalg.qr(
        np.hstack([np.ones((n, 1)) / math.sqrt(n), np.eye(n)[:, :n - 1]]))[0][:, 1:]

    def best_f_at(cand, tc):
        h = _gradient_estimate_f_matrix(chain, sys, mean, k, dim, cand, tc)
        v = np.linalg.eigh(basis.T @ h @ basis)[1][:, 0]
        f = basis @ v
        return f / np.linalg.norm(f)

    rho = np.asarray(report.witness["rho"])
    f0 = np.asarray(report.witness["f"])
    t = float(report.witness["t"])
    best = score(rho, f0, t)
    witness = dict(report.witness)

    t_candidates = np.geomspace(1e-4, 10.0, 24)
    seeds = [rho]
    eps = 1e-6
    for ix in range(min(chain.n_states, 8)):
        bump = np.full(chain.n_states, eps)
        bump[ix] += (1.0 - eps) / chain.pi[ix]
        seeds.append(bump / float(np.dot(bump, chain.pi)))
    for cand in seeds:
        for tc in t_candidates:
            f = best_f_at(cand, tc)
            r = score(cand, f, tc)
            if r < best:
                best, rho, t = r, cand, float(tc)
                witness = {"rho": cand.copy(), "f": f.copy(), "t": float(tc)}
    for _ in range(iters):
        improved = False
        # exact f step at fixed rho, scanning t
        for tc in t_candidates:
            f = best_f_at(rho, tc)
            r = score(rho, f, tc)
            if r < best:
                best, t = r, float(tc)
                witness = {"rho": rho.copy(), "f": f.copy(), "t": float(tc)}
                improved = True
        if best < -1e-9:
            break
        # greedy multiplicative rho proposals
        for _ in range(8):
            prop = rho * np.exp(0.5 * rng.standard_normal(chain.n_states))
            prop = prop / float(np.dot(prop, chain.pi))
            f = best_f_at(prop, t)
            r = score(prop, f, t)
            if r < best:
                best = r
                rho = prop
                witness = {"rho": rho.copy(), "f": f.copy(), "t": float(t)}
                improved = True
        if best < -1e-9 or not improved:
            break
    return ProbeResult(found_violation=bool(best < -1e-9), residual=best,
                       witness=witness)


def _rp_coeff1(k: float, t: float) -> float:
    """(exp(2Kt) - 1)/K with the K -> 0 limit 2t."""
    if k == 0.0:
        return 2.0 * t
    return math.expm1(2.0 * k * t) / k


def _rp_coeff2(k: float, dim: float, t: float) -> float:
    """((exp(2Kt)-1)/K - 2t) / (K dim); series for small Kt, limit 2t^2/dim."""
    if np.isinf(dim):
        return 0.0
    kt = k * t
    if abs(kt) < 1e-6:
        return (2.0 * t * t + (4.0 / 3.0) * kt * t * t + (2.0 / 3.0) * kt * kt * t * t) / dim
    return (_rp_coeff1(k, t) - 2.0 * t) / (k * dim)


def reverse_poincare_residual(chain: MarkovChain, sys: HeatSystem, mean,
                              k: float, dim: float, rho, f, t: float) -> float:
    """Normalized residual of
    <f^2, P_t rho>_pi - <(P_t f)^2, rho>_pi
        >= c1(K,t) A_rho(P_t f) + c2(K,dim,t) <rho, (Delta P_t f)^2>_pi."""
    rho_t = heat_apply(sys, t, rho)
    f_t = heat_apply(sys, t, f)
    lhs = func_inner(chain, f * f, rho_t) - func_inner(chain, f_t * f_t, rho)
    lf = laplacian(chain, f_t)
    rhs = _rp_coeff1(k, t) * a_form(chain, mean, rho, f_t) \
        + _rp_coeff2(k, dim, t) * func_inner(chain, rho, lf * lf)
    return (lhs - rhs) / _residual_scale(chain, lhs, rhs, f)


def verify_reverse_poincare(chain: MarkovChain, mean, k: float, dim,
                            trials: int = 50, t_grid=(0.1, 0.5, 1.0, 3.0),
                            seed: int = 0) -> VerifyReport:
    """Check the reverse Poincare inequality (needs a mean below arithmetic)."""
    mean = get_mean(mean)
    _check_below_arithmetic(mean)
    sys = spectral_decompose(chain)
    rng = np.random.default_rng(seed)
    dim = float(dim)
    worst = math.inf
    witness = {}
    violations = 0
    for _ in range(trials):
        rho = _random_density(chain, rng)
        f = rng.standard_normal(chain.n_states)
        for t in t_grid:
            r = reverse_poincare_residual(chain, sys, mean, k, dim, rho, f, t)
            if r < worst:
                worst = r
                witness = {"rho": rho.copy(), "f": f.copy(), "t": float(t)}
            if r < -1e-9:
                violations += 1
    return VerifyReport("reverse_poincare", trials, worst, witness, violations)


def _check_below_arithmetic(mean, samples: int = 512, seed: int = 1):
    """theta <= arithmetic: exact for the built-ins, sampled otherwise."""
    if mean.kind in ("arithmetic", "logarithmic", "geometric"):
        return
    from .errors import DomainError

    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(-6, 6, samples))
    s = np.exp(rng.uniform(-6, 6, samples))
    excess = np.max(np.asarray(mean.value(r, s)) - 0.5 * (r + s))
    if excess > 1e-12 * np.max(np.maximum(r, s)):
        raise DomainError("the reverse Poincare inequality needs a mean "
                          "below the arithmetic one")
    warnings.warn("mean <= arithmetic verified only on samples",
                  PreconditionHeuristic)


def check_linf_gradient_bound(chain: MarkovChain, mean, trials: int = 20,
                              t_grid=(0.1, 1.0, 5.0), seed: int = 0,
                              curvature_status: str = "exact") -> VerifyReport:
    """sup-norm gradient decay under nonnegative curvature:
    max over edges |P_t f(y) - P_t f(x)| <= ||f||_inf / sqrt(t q_min)."""
    if curvature_status == "heuristic":
        warnings.warn("nonnegative curvature is heuristic for this chain/mean",
                      PreconditionHeuristic)
    sys = spectral_decompose(chain)
    rng = np.random.default_rng(seed)
    q_min = chain.stats().q_min
    ex, ey, _ = chain.edges
    worst = math.inf
    witness = {}
    violations = 0
    for _ in range(trials):
        f = rng.standard_normal(chain.n_states)
        for t in t_grid:
            f_t = heat_apply(sys, t, f)
            lhs = float(np.abs(f_t[ey] - f_t[ex]).max()) if ex.size else 0.0
            rhs = float(np.abs(f).max()) / math.sqrt(t * q_min)
            r = (rhs - lhs) / max(abs(lhs) + abs(rhs), 1e-300)
            if r < worst:
                worst = r
                witness = {"f": f.copy(), "t": float(t)}
            if lhs > rhs + 1e-9:
                violations += 1
    return VerifyReport("linf_gradient_bound", trials, worst, witness, violations)


def check_heat_kernel_bound(sys: HeatSystem, chain: MarkovChain,
                            t_grid=(0.1, 0.5, 1.0, 2.0)) -> VerifyReport:
    """Off-diagonal kernel bound p_t(x,y) <= (1/pi(x)) t^r / r! for r = d(x,y)."""
    dist = distance_matrix(chain)
    pi = chain.pi
    worst = math.inf
    witness = {}
    violations = 0
    fact = np.array([math.factorial(r) for r in range(int(dist.max()) + 1)],
                    dtype=float)
    for t in t_grid:
        p = heat_kernel(sys, t)
        bound = (float(t) ** dist) / fact[dist] / pi[:, None]
        resid = (bound - p) / np.maximum(np.abs(bound) + np.abs(p), 1e-300)
        i, j = np.unravel_index(np.argmin(resid), resid.shape)
        if resid[i, j] < worst:
            worst = float(resid[i, j])
            witness = {"x": chain.states[i], "y": chain.states[j], "t": float(t)}
        violations += int(np.sum(p > bound + 1e-12))
    return VerifyReport("heat_kernel_bound", len(t_grid), worst, witness,
                        violations)
