"""Mean-modulated Gamma calculus on a finite reversible chain.

Operators follow the weighted-walk conventions: Delta f(x) is the kernel
average of increments, the density-modulated Laplacian reweights edges by
2 * d1theta(rho_x, rho_y), and the iterated form pairs the modulated
carre du champ with the standard Laplacian.  Vector fields are antisymmetric
edge functions with the half double-sum inner product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import MarkovChain
from .errors import DomainError, ShapeMismatch
from .means import ARITHMETIC, get_mean


def _as_function(chain: MarkovChain, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (chain.n_states,):
        raise ShapeMismatch(f"expected function of shape ({chain.n_states},), got {f.shape}")
    return f


def validate_density(chain: MarkovChain, mean, rho) -> np.ndarray:
    """Check a density vector against the mean's admissible domain."""
    mean = get_mean(mean)
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (chain.n_states,):
        raise ShapeMismatch(f"expected density of shape ({chain.n_states},), got {rho.shape}")
    if not np.isfinite(rho).all():
        raise DomainError("density has non-finite entries")
    if (rho < 0).any():
        raise DomainError("density has negative entries")
    if mean.domain_class == "open" and (rho == 0).any():
        x = int(np.argmin(rho))
        raise DomainError(
            f"density vanishes at state {chain.states[x]!r} but the "
            f"{mean.kind} mean requires strictly positive densities")
    return rho


def dirac(chain: MarkovChain, state) -> np.ndarray:
    """Dirac density: 1/pi(x) at x, zero elsewhere (so <delta_x, g>_pi = g(x))."""
    rho = np.zeros(chain.n_states)
    ix = chain.index(state)
    rho[ix] = 1.0 / chain.pi[ix]
    return rho


def equilibrium(chain: MarkovChain) -> np.ndarray:
    """The constant density 1 (the stationary measure itself)."""
    return np.ones(chain.n_states)


def func_inner(chain: MarkovChain, f, g) -> float:
    """<f, g>_pi."""
    return float(np.dot(np.asarray(f) * chain.pi, np.asarray(g)))


def laplacian_matrix(chain: MarkovChain) -> np.ndarray:
    """Matrix of Delta: (Q - I) acting on functions."""
    return chain.q - np.eye(chain.n_states)


def laplacian(chain: MarkovChain, f) -> np.ndarray:
    """Delta f(x) = sum_y Q(x,y) (f(y) - f(x))."""
    f = _as_function(chain, f)
    return chain.q @ f - f


def gradient_field(chain: MarkovChain, f) -> np.ndarray:
    """Antisymmetric edge field (f(y) - f(x)) on adjacent pairs, else 0."""
    f = _as_function(chain, f)
    v = np.subtract.outer(f, f).T          # v[x, y] = f(y) - f(x)
    return np.where(chain.adjacency, v, 0.0)


def divergence(chain: MarkovChain, v) -> np.ndarray:
    """div V(x) = sum_y V(x,y) Q(x,y)."""
    v = np.asarray(v, dtype=float)
    n = chain.n_states
    if v.shape != (n, n):
        raise ShapeMismatch(f"expected field of shape ({n},{n}), got {v.shape}")
    return (v * chain.q).sum(axis=1)


def vector_field(chain: MarkovChain, v) -> np.ndarray:
    """Validate an antisymmetric, adjacency-supported edge field."""
    v = np.asarray(v, dtype=float)
    n = chain.n_states
    if v.shape != (n, n):
        raise ShapeMismatch(f"expected field of shape ({n},{n}), got {v.shape}")
    if np.abs(v + v.T).max() > 1e-12 * max(1.0, np.abs(v).max()):
        raise DomainError("vector field is not antisymmetric")
    if np.abs(np.where(chain.adjacency, 0.0, v)).max() > 0:
        raise DomainError("vector field supported off the adjacency relation")
    return v


def vf_inner(chain: MarkovChain, v1, v2) -> float:
    """<V1, V2>_pi = (1/2) sum_{x,y} V1 V2 Q(x,y) pi(x)."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    return 0.5 * float(np.sum(v1 * v2 * chain.q * chain.pi[:, None]))


def rho_hat_edges(chain: MarkovChain, mean, rho) -> np.ndarray:
    """theta(rho_x, rho_y) on the ordered edge list."""
    mean = get_mean(mean)
    ex, ey, _ = chain.edges
    return np.asarray(mean.value(rho[ex], rho[ey]), dtype=float)


def d1_edges(chain: MarkovChain, mean, rho) -> np.ndarray:
    """d1theta(rho_x, rho_y) on the ordered edge list."""
    mean = get_mean(mean)
    ex, ey, _ = chain.edges
    out = mean.d1(rho[ex], rho[ey])
    return np.broadcast_to(np.asarray(out, dtype=float), ex.shape).copy()


def delta_hat_edges(chain: MarkovChain, mean, rho) -> np.ndarray:
    """d1theta(rho_x,rho_y) Drho(x) + d2theta(rho_x,rho_y) Drho(y) on edges."""
    mean = get_mean(mean)
    ex, ey, _ = chain.edges
    lap_rho = laplacian(chain, rho)
    d1 = np.broadcast_to(np.asarray(mean.d1(rho[ex], rho[ey]), float), ex.shape)
    d2 = np.broadcast_to(np.asarray(mean.d1(rho[ey], rho[ex]), float), ex.shape)
    return d1 * lap_rho[ex] + d2 * lap_rho[ey]


def vf_inner_rho(chain: MarkovChain, mean, rho, v1, v2) -> float:
    """<V1, V2>_rho: the pi inner product with edge weights theta(rho_x, rho_y)."""
    rho = validate_density(chain, mean, rho)
    ex, ey, qe = chain.edges
    th = rho_hat_edges(chain, mean, rho)
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    return 0.5 * float(np.sum(th * v1[ex, ey] * v2[ex, ey] * qe * chain.pi[ex]))


def rho_laplacian(chain: MarkovChain, mean, rho, f) -> np.ndarray:
    """Density-modulated Laplacian sum_y 2 d1theta(rho_x,rho_y)(f(y)-f(x))Q(x,y).

    Coincides with the standard Laplacian for the arithmetic mean (any rho)
    and for the constant density (any mean).
    """
    rho = validate_density(chain, mean, rho)
    f = _as_function(chain, f)
    ex, ey, qe = chain.edges
    d1 = d1_edges(chain, mean, rho)
    contrib = 2.0 * d1 * (f[ey] - f[ex]) * qe
    return np.bincount(ex, weights=contrib, minlength=chain.n_states)


def gamma_rho(chain: MarkovChain, mean, rho, f, g=None) -> np.ndarray:
    """Modulated carre du champ
    sum_y d1theta(rho_x,rho_y)(f(y)-f(x))(g(y)-g(x))Q(x,y)."""
    rho = validate_density(chain, mean, rho)
    f = _as_function(chain, f)
    g = f if g is None else _as_function(chain, g)
    ex, ey, qe = chain.edges
    d1 = d1_edges(chain, mean, rho)
    contrib = d1 * (f[ey] - f[ex]) * (g[ey] - g[ex]) * qe
    return np.bincount(ex, weights=contrib, minlength=chain.n_states)


def gamma2_rho(chain: MarkovChain, mean, rho, f, g=None) -> np.ndarray:
    """Iterated form: the outer Laplacian is the standard Delta,
    2 Gamma2 = Delta Gamma_rho(f,g) - Gamma_rho(f, Delta g) - Gamma_rho(g, Delta f)."""
    f = _as_function(chain, f)
    g = f if g is None else _as_function(chain, g)
    grho = gamma_rho(chain, mean, rho, f, g)
    lf = laplacian(chain, f)
    lg = laplacian(chain, g)
    return 0.5 * (laplacian(chain, grho)
                  - gamma_rho(chain, mean, rho, f, lg)
                  - gamma_rho(chain, mean, rho, g, lf))


def gamma(chain: MarkovChain, f, g=None) -> np.ndarray:
    """Classical carre du champ (arithmetic mean; density-independent)."""
    return gamma_rho(chain, ARITHMETIC, np.ones(chain.n_states), f, g)


def gamma2(chain: MarkovChain, f, g=None) -> np.ndarray:
    """Classical iterated carre du champ."""
    return gamma2_rho(chain, ARITHMETIC, np.ones(chain.n_states), f, g)


def a_form(chain: MarkovChain, mean, rho, f) -> float:
    """Dirichlet energy ||grad f||_rho^2 via the edge weights theta(rho_x, rho_y).

    Computed without the Gamma operators so it can cross-validate them.
    """
    rho = validate_density(chain, mean, rho)
    f = _as_function(chain, f)
    ex, ey, qe = chain.edges
    th = rho_hat_edges(chain, mean, rho)
    df = f[ey] - f[ex]
    return 0.5 * float(np.sum(th * df * df * qe * chain.pi[ex]))


def b_form(chain: MarkovChain, mean, rho, f) -> float:
    """Second-order form
    (1/2) <Dhat rho . grad f, grad f>_pi - <rho_hat . grad f, grad(Delta f)>_pi,
    materialized from the edge arrays independently of the Gamma route.
    """
    rho = validate_density(chain, mean, rho)
    f = _as_function(chain, f)
    ex, ey, qe = chain.edges
    wpe = qe * chain.pi[ex]
    df = f[ey] - f[ex]
    lf = laplacian(chain, f)
    dlf = lf[ey] - lf[ex]
    dhat = delta_hat_edges(chain, mean, rho)
    th = rho_hat_edges(chain, mean, rho)
    return 0.25 * float(np.sum(dhat * df * df * wpe)) \
        - 0.5 * float(np.sum(th * df * dlf * wpe))


@dataclass(frozen=True)
class FormPair:
    """Quadratic-form matrices of the curvature-dimension inequality.

    f' m f  = <rho, Gamma2_rho f - (1/dim)(Delta f)^2>_pi and
    f' n f  = <rho, Gamma_rho f>_pi; n is positive semidefinite and
    constants lie in the null space of both.
    """

    m: np.ndarray
    n: np.ndarray
    mean_kind: str
    rho: np.ndarray
    dim: float


def _gamma_weight_matrix(chain: MarkovChain, d1e: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Matrix T with f' T g = sum_x a(x) pi(x) Gamma_rho(f, g)(x)."""
    n = chain.n_states
    ex, ey, qe = chain.edges
    w = np.zeros((n, n))
    w[ex, ey] = a[ex] * chain.pi[ex] * d1e * qe
    ws = w + w.T
    t = np.diag(ws.sum(axis=1)) - ws
    return t


def assemble_forms(chain: MarkovChain, mean, rho, dim) -> FormPair:
    """Assemble the (m, n) quadratic-form pair for a density and dimension.

    dim is the dimension parameter in (0, inf]; pass numpy.inf to drop the
    (Delta f)^2 correction.
    """
    mean = get_mean(mean)
    rho = validate_density(chain, mean, rho)
    dim = float(dim)
    if not (dim > 0):
        raise DomainError(f"dimension must be positive, got {dim}")
    d1e = d1_edges(chain, mean, rho)
    lap = laplacian_matrix(chain)
    t_rho = _gamma_weight_matrix(chain, d1e, rho)
    t_lrho = _gamma_weight_matrix(chain, d1e, lap @ rho)
    m = 0.5 * (t_lrho - t_rho @ lap - lap.T @ t_rho)
    if np.isfinite(dim):
        m = m - (1.0 / dim) * (lap.T @ np.diag(rho * chain.pi) @ lap)
    m = 0.5 * (m + m.T)
    n_mat = 0.5 * (t_rho + t_rho.T)
    return FormPair(m=m, n=n_mat, mean_kind=mean.kind, rho=rho, dim=dim)


def cd_quadratic(chain: MarkovChain, mean, rho, dim, f) -> tuple[float, float]:
    """Scalar evaluation (<rho, Gamma2 f - (1/dim)(Delta f)^2>, <rho, Gamma f>).

    O(edges) route used by gradient computations; agrees with the assembled
    FormPair applied to f.
    """
    rho = validate_density(chain, mean, rho)
    f = _as_function(chain, f)
    g2 = gamma2_rho(chain, mean, rho, f)
    g1 = gamma_rho(chain, mean, rho, f)
    lf = laplacian(chain, f)
    m_val = func_inner(chain, rho, g2)
    if np.isfinite(dim):
        m_val -= func_inner(chain, rho, lf * lf) / float(dim)
    return m_val, func_inner(chain, rho, g1)


def check_geometric_green(chain: MarkovChain, rho, trials: int = 16,
                          seed: int = 0) -> dict[str, float]:
    """Residual of <Delta_rho f1, f2>_{rho pi} + <grad f1, grad f2>_rho per mean.

    Zero (to rounding) exactly for the geometric mean, where the modulated
    Laplacian is self-adjoint in the rho-weighted inner product; generically
    nonzero for the arithmetic and logarithmic means.
    """
    from .means import BUILTIN_MEANS

    rho = np.asarray(rho, dtype=float)
    rng = np.random.default_rng(seed)
    out = {}
    for kind, mean in BUILTIN_MEANS.items():
        validate_density(chain, mean, rho)
        worst = 0.0
        for _ in range(trials):
            f1 = rng.standard_normal(chain.n_states)
            f2 = rng.standard_normal(chain.n_states)
            lhs = float(np.sum(rho_laplacian(chain, mean, rho, f1)
                               * f2 * rho * chain.pi))
            rhs = vf_inner_rho(chain, mean, rho,
                               gradient_field(chain, f1),
                               gradient_field(chain, f2))
            scale = max(abs(lhs), abs(rhs), 1e-30)
            worst = max(worst, abs(lhs + rhs) / scale)
        out[kind] = worst
    return out
