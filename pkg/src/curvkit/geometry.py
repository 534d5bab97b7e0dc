"""Intrinsic metric, Cheeger constant, and the spectral-geometric
inequality battery.

The intrinsic distance maximizes f(y) - f(x) subject to the pointwise energy
constraint Gamma f <= 1 everywhere; a log-barrier Newton method solves the
convex program.  The Cheeger constant is an exact minimum over subsets,
computed by two independent enumeration engines.  Inequality checks return
reports that carry the status of every precondition, so proof-backed and
heuristic-backed results stay distinguishable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .chain import MarkovChain, distance_matrix
from .errors import PreconditionHeuristic, TooLarge
from .heat import HeatSystem, avg_mixing_time, spectral_decompose

#: inequality slacks are compared against this times the sides' magnitudes
SLACK_REL_TOL = 1e-9
#: exact cheeger enumeration guard (block engine handles up to 2^31 subsets)
CHEEGER_MAX_STATES = 32


# -- intrinsic metric -------------------------------------------------------

def _pointwise_gamma_matrices(chain: MarkovChain) -> np.ndarray:
    """Stack of A_z with f' A_z f = Gamma f(z) = (1/2) sum_y Q(z,y)(f(y)-f(z))^2."""
    cached = getattr(chain, "_gamma_point_mats", None)
    if cached is not None:
        return cached
    n = chain.n_states
    mats = np.zeros((n, n, n))
    for z in range(n):
        a = mats[z]
        for y in np.flatnonzero(chain.adjacency[z]):
            qzy = chain.q[z, y]
            a[z, z] += qzy
            a[y, y] += qzy
            a[z, y] -= qzy
            a[y, z] -= qzy
    mats *= 0.5
    chain._gamma_point_mats = mats
    return mats


def d_gamma(chain: MarkovChain, x, y, gap_tol: float = 1e-9,
            full_output: bool = False):
    """Intrinsic distance sup{f(y) - f(x) : Gamma f <= 1 pointwise}.

    Log-barrier Newton on the gauge-fixed program (f(x) = 0, start f = 0,
    barrier parameter grows tenfold per stage, 30 Newton steps per stage,
    stop when the duality gap bound falls below gap_tol).
    """
    ix, iy = chain.index(x), chain.index(y)
    if ix == iy:
        return (0.0, True) if full_output else 0.0
    n = chain.n_states
    keep = [i for i in range(n) if i != ix]
    pos = {i: j for j, i in enumerate(keep)}
    mats = _pointwise_gamma_matrices(chain)[:, keep][:, :, keep]
    c = np.zeros(n - 1)
    c[pos[iy]] = 1.0

    def slacks_of(v):
        return 1.0 - np.einsum("zij,i,j->z", mats, v, v)

    f = np.zeros(n - 1)
    t = 1.0
    m_constraints = n
    converged = True
    while True:
        for _ in range(30):
            slacks = slacks_of(f)
            grads = 2.0 * np.einsum("zij,j->zi", mats, f)
            g = -t * c + grads.T @ (1.0 / slacks)
            h = 2.0 * np.einsum("zij,z->ij", mats, 1.0 / slacks) \
                + grads.T @ (grads / (slacks * slacks)[:, None])
            try:
                step = np.linalg.solve(h, -g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(h, -g, rcond=None)[0]
            decrement = float(-g @ step)
            alpha = 1.0
            phi0 = -t * (c @ f) - float(np.log(slacks).sum())
            for _ in range(60):
                f_new = f + alpha * step
                s_new = slacks_of(f_new)
                if (s_new > 0).all():
                    phi_new = -t * (c @ f_new) - float(np.log(s_new).sum())
                    if phi_new <= phi0 - 0.25 * alpha * decrement + 1e-14:
                        break
                alpha *= 0.5
            else:
                converged = False
                break
            f = f + alpha * step
            if decrement / 2.0 <= 1e-12:
                break
        if m_constraints / t <= gap_tol:
            break
        t *= 10.0
        if t > 1e16:
            converged = False
            break
    value = float(c @ f)
    if not converged:
        warnings.warn(f"d_gamma({x},{y}) stopped early; value is a lower bound")
    return (value, converged) if full_output else value


def diam_gamma(chain: MarkovChain, gap_tol: float = 1e-9) -> float:
    """Diameter in the intrinsic metric (max over unordered pairs)."""
    best = 0.0
    for i in range(chain.n_states):
        for j in range(i + 1, chain.n_states):
            best = max(best, d_gamma(chain, i, j, gap_tol=gap_tol))
    return best


def diam_combinatorial(chain: MarkovChain) -> int:
    return int(distance_matrix(chain).max())


# -- Cheeger constant -------------------------------------------------------

@dataclass(frozen=True)
class CheegerResult:
    h: float
    subset: tuple[str, ...]


def cut_weight(chain: MarkovChain, subset_idx) -> float:
    """|boundary W| = sum of w(x,y) over x in W, y outside W."""
    mask = np.zeros(chain.n_states, dtype=bool)
    mask[list(subset_idx)] = True
    return float(chain.w[np.ix_(mask, ~mask)].sum())


def _cheeger_score(chain: MarkovChain, subset_idx):
    piw = float(chain.pi[list(subset_idx)].sum())
    return cut_weight(chain, subset_idx) / piw


def cheeger(chain: MarkovChain) -> CheegerResult:
    """Exact Cheeger constant inf_{pi(W) <= 1/2} |boundary W| / pi(W).

    Enumerates the 2^(n-1) subsets avoiding one fixed vertex and scores each
    in both orientations (a set and its complement cut identically), which
    covers every feasible W for any stationary measure.
    """
    n = chain.n_states
    if n < 2:
        raise TooLarge("cheeger needs at least two states")
    if n > CHEEGER_MAX_STATES:
        raise TooLarge(f"exact cheeger enumeration capped at {CHEEGER_MAX_STATES} states")
    idx = _cheeger_block(chain)
    return CheegerResult(h=_cheeger_score(chain, idx),
                         subset=tuple(sorted((chain.states[i] for i in idx),
                                             key=chain.index)))


def _cheeger_block(chain: MarkovChain) -> list[int]:
    """Vectorized enumeration: subsets split into low/high vertex blocks.

    For each high-block pattern, all low-block patterns are scored at once;
    cross terms between blocks are maintained incrementally over a Gray-code
    walk of the high patterns.
    """
    n = chain.n_states
    w = chain.w
    r = w.sum(axis=1)
    pi = chain.pi
    nb = n - 1                      # vertex 0 fixed outside the enumerated set
    verts = np.arange(1, n)
    lo_bits = min(nb, 20)
    hi_bits = nb - lo_bits
    lo_verts = verts[:lo_bits]
    hi_verts = verts[lo_bits:]

    size_lo = 1 << lo_bits
    b = ((np.arange(size_lo, dtype=np.int64)[:, None]
          >> np.arange(lo_bits)[None, :]) & 1).astype(bool)
    pi_lo = b @ pi[lo_verts]
    t_lo = b @ r[lo_verts]
    for a in range(lo_bits):
        for bb in range(a + 1, lo_bits):
            wv = w[lo_verts[a], lo_verts[bb]]
            if wv > 0:
                t_lo -= (2.0 * wv) * (b[:, a] & b[:, bb])
    contrib = [b @ (2.0 * w[h, lo_verts]) for h in hi_verts]

    best = math.inf
    best_lo = 0
    best_hi_set: set[int] = set()
    best_flip = False
    cross = np.zeros(size_lo)
    hi_set: set[int] = set()
    const = 0.0
    pi_hi = 0.0
    prev_gray = 0
    cut_buf = np.empty(size_lo)
    piw_buf = np.empty(size_lo)
    ratio = np.empty(size_lo)

    for m in range(1 << hi_bits):
        gray = m ^ (m >> 1)
        diff = gray ^ prev_gray
        if diff:
            j = diff.bit_length() - 1
            hv = hi_verts[j]
            if j in hi_set:
                hi_set.remove(j)
                sign = -1.0
            else:
                hi_set.add(j)
                sign = 1.0
            cross += sign * contrib[j]
            pi_hi += sign * pi[hv]
            const += sign * r[hv]
            for k in hi_set:
                if k != j and w[hv, hi_verts[k]] > 0:
                    const -= sign * 2.0 * w[hv, hi_verts[k]]
        prev_gray = gray

        np.add(t_lo, const - cross, out=cut_buf)
        np.add(pi_lo, pi_hi, out=piw_buf)
        feasible = (piw_buf > 0) & (piw_buf <= 0.5 + 1e-12)
        if feasible.any():
            np.divide(cut_buf, piw_buf, out=ratio, where=feasible)
            ratio[~feasible] = math.inf
            i = int(np.argmin(ratio))
            if ratio[i] < best:
                best = float(ratio[i])
                best_lo, best_hi_set, best_flip = i, set(hi_set), False
        comp = (piw_buf >= 0.5 - 1e-12) & (piw_buf < 1.0)
        if comp.any():
            np.divide(cut_buf, 1.0 - piw_buf, out=ratio, where=comp)
            ratio[~comp] = math.inf
            i = int(np.argmin(ratio))
            if ratio[i] < best:
                best = float(ratio[i])
                best_lo, best_hi_set, best_flip = i, set(hi_set), True

    members = [int(lo_verts[a]) for a in range(lo_bits) if (best_lo >> a) & 1]
    members += [int(hi_verts[k]) for k in best_hi_set]
    if best_flip:
        members = [i for i in range(n) if i not in set(members)]
    return members


def cheeger_gray(chain: MarkovChain, max_states: int = 20) -> CheegerResult:
    """Reference engine: plain Gray-code walk with incremental cut updates."""
    n = chain.n_states
    if n < 2 or n > max_states:
        raise TooLarge(f"gray cheeger limited to 2..{max_states} states")
    w = chain.w
    pi = chain.pi
    in_set = np.zeros(n, dtype=bool)
    cut = 0.0
    piw = 0.0
    best = math.inf
    best_members: list[int] = []
    best_flip = False
    prev_gray = 0
    for m in range(1, 1 << (n - 1)):
        gray = m ^ (m >> 1)
        j = ((gray ^ prev_gray).bit_length() - 1) + 1   # vertex 0 stays outside
        prev_gray = gray
        if in_set[j]:
            in_set[j] = False
            piw -= pi[j]
            cut += 2.0 * float(w[j] @ in_set) - float(w[j].sum())
        else:
            cut += float(w[j].sum()) - 2.0 * float(w[j] @ in_set)
            in_set[j] = True
            piw += pi[j]
        if 0 < piw <= 0.5 + 1e-12:
            ratio = cut / piw
            if ratio < best:
                best = ratio
                best_members, best_flip = list(np.flatnonzero(in_set)), False
        if 0.5 - 1e-12 <= piw < 1.0:
            ratio = cut / (1.0 - piw)
            if ratio < best:
                best = ratio
                best_members, best_flip = list(np.flatnonzero(in_set)), True
    if best_flip:
        chosen = set(best_members)
        best_members = [i for i in range(n) if i not in chosen]
    return CheegerResult(h=_cheeger_score(chain, best_members),
                         subset=tuple(sorted((chain.states[i] for i in best_members),
                                             key=chain.index)))


# -- inequality reports -----------------------------------------------------

@dataclass
class InequalityReport:
    """Outcome of one inequality check, always oriented as lhs <= rhs.

    holds is None ("not applicable") when some precondition is unmet; a
    heuristic precondition keeps the check informative but not proof-backed.
    """

    name: str
    lhs: float
    rhs: float
    holds: bool | None
    slack: float
    preconditions: list[tuple[str, str]] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "holds": self.holds, "slack": self.slack,
                "preconditions": [{"name": n, "status": s}
                                  for n, s in self.preconditions],
                "details": self.details}


def _report(name, lhs, rhs, preconditions, details=None) -> InequalityReport:
    lhs = float(lhs)
    rhs = float(rhs)
    slack = rhs - lhs
    unmet = any(status == "unmet" for _, status in preconditions)
    if any(status == "heuristic" for _, status in preconditions):
        warnings.warn(f"{name}: checked under a heuristic precondition",
                      PreconditionHeuristic)
    holds = None if unmet else bool(slack >= -SLACK_REL_TOL * (abs(lhs) + abs(rhs)))
    return InequalityReport(name=name, lhs=lhs, rhs=rhs, holds=holds,
                            slack=slack, preconditions=list(preconditions),
                            details=details or {})


def check_cheeger_l1(chain: MarkovChain, trials: int = 100, seed: int = 0,
                     h: float | None = None) -> InequalityReport:
    """L1 gradient bound ||grad f||_1 >= (h/2) ||f||_1 for pi-mean-zero f.

    The worst trial is reported; the indicator of the Cheeger minimizer is
    included among the trial functions (it is tight up to a factor <= 2).
    """
    res = cheeger(chain) if h is None else None
    hval = res.h if h is None else h
    pi = chain.pi
    ex, ey, qe = chain.edges
    rng = np.random.default_rng(seed)

    fs = []
    if res is not None:
        ind = np.zeros(chain.n_states)
        ind[[chain.index(s) for s in res.subset]] = 1.0
        fs.append(ind - float(ind @ pi))
    for _ in range(trials):
        f = rng.standard_normal(chain.n_states)
        fs.append(f - float(f @ pi))

    worst = (math.inf, 0.0, 0.0)
    for f in fs:
        grad_l1 = 0.5 * float(np.abs(f[ey] - f[ex]) @ (qe * pi[ex]))
        f_l1 = float(np.abs(f) @ pi)
        rhs_val = 0.5 * hval * f_l1
        margin = grad_l1 - rhs_val
        if margin < worst[0]:
            worst = (margin, rhs_val, grad_l1)
    return _report("cheeger_l1", worst[1], worst[2],
                   [("mean_zero_functions", "exact")],
                   {"h": hval, "trials": len(fs)})


def check_diameter_bound_ent(chain: MarkovChain, k: float,
                             k_status: str = "exact",
                             diam_g: float | None = None) -> list[InequalityReport]:
    """Diameter bounds under positive entropic curvature K.

    Intrinsic:      diam_Gamma <= (2/K) sqrt(2 c) with c = D_pi log D_pi/(D_pi - 1)
    combinatorial:  diam       <= (2/K) sqrt(c);   c := 1 when D_pi = 1.
    """
    pre = [("entropic_curvature_positive", k_status if k > 0 else "unmet")]
    d_pi = chain.stats().deg_pi_max
    c = 1.0 if abs(d_pi - 1.0) < 1e-12 else d_pi * math.log(d_pi) / (d_pi - 1.0)
    if k <= 0:
        nan = float("nan")
        return [_report("diameter_ent_dgamma", nan, nan, pre, {"k": k}),
                _report("diameter_ent_d", nan, nan, pre, {"k": k})]
    dg = diam_gamma(chain) if diam_g is None else diam_g
    dd = diam_combinatorial(chain)
    return [
        _report("diameter_ent_dgamma", dg, (2.0 / k) * math.sqrt(2.0 * c), pre,
                {"k": k, "d_pi": d_pi}),
        _report("diameter_ent_d", dd, (2.0 / k) * math.sqrt(c), pre,
                {"k": k, "d_pi": d_pi}),
    ]


def check_diameter_bound_finite_n(chain: MarkovChain, mean_kind: str, k: float,
                                  dim: float, k_status: str = "exact",
                                  diam_g: float | None = None) -> list[InequalityReport]:
    """Finite-dimension diameter bounds pi sqrt(dim/K) and pi sqrt(D dim/(2K))."""
    below_arith = mean_kind in ("arithmetic", "logarithmic", "geometric")
    pre = [("curvature_positive", k_status if k > 0 else "unmet"),
           ("dimension_finite", "exact" if np.isfinite(dim) else "unmet"),
           ("mean_below_arithmetic", "exact" if below_arith else "heuristic")]
    if k <= 0 or not np.isfinite(dim):
        nan = float("nan")
        return [_report("diameter_finite_n_dgamma", nan, nan, pre, {"k": k}),
                _report("diameter_finite_n_d", nan, nan, pre, {"k": k})]
    dg = diam_gamma(chain) if diam_g is None else diam_g
    dd = diam_combinatorial(chain)
    dmax = chain.stats().deg_weighted_max
    return [
        _report("diameter_finite_n_dgamma", dg, math.pi * math.sqrt(dim / k),
                pre, {"k": k, "dim": dim}),
        _report("diameter_finite_n_d", dd, math.pi * math.sqrt(dmax * dim / (2.0 * k)),
                pre, {"k": k, "dim": dim}),
    ]


def check_tau_lower_bound(chain: MarkovChain, sys: HeatSystem | None = None,
                          tau: float | None = None) -> InequalityReport:
    """Average-mixing-time lower bound
    tau(1/4) >= (pi_min/(8 pi_max))^(1/R0) (q_min/e) R0, R0 = log(4 pi_max)/log(q_min)."""
    st = chain.stats()
    ok = st.pi_max < 0.25 and st.q_min < 1.0
    pre = [("pi_max_below_quarter", "exact" if st.pi_max < 0.25 else "unmet"),
           ("q_min_below_one", "exact" if st.q_min < 1.0 else "unmet")]
    if not ok:
        nan = float("nan")
        return _report("tau_avg_lower_bound", nan, nan, pre, {})
    r0 = math.log(4.0 * st.pi_max) / math.log(st.q_min)
    bound = (st.pi_min / (8.0 * st.pi_max)) ** (1.0 / r0) * (st.q_min / math.e) * r0
    if tau is None:
        tau = avg_mixing_time(sys or spectral_decompose(chain), 0.25)
    return _report("tau_avg_lower_bound", bound, tau, pre,
                   {"r0": r0, "tau_avg_quarter": tau})


def check_buser(chain: MarkovChain, curvature_status: str = "heuristic",
                h: float | None = None, lam: float | None = None) -> InequalityReport:
    """Buser inequality lambda_1 <= (16 log 2 / q_min) h^2 under nonnegative
    entropic curvature."""
    from .curvature import lambda1 as _lambda1

    pre = [("entropic_curvature_nonnegative", curvature_status)]
    hval = cheeger(chain).h if h is None else h
    lamval = _lambda1(chain) if lam is None else lam
    q_min = chain.stats().q_min
    rhs = 16.0 * math.log(2.0) / q_min * hval * hval
    return _report("buser", lamval, rhs, pre, {"h": hval, "q_min": q_min})


def check_lambda_tau(chain: MarkovChain, curvature_status: str = "heuristic",
                     tau: float | None = None,
                     lam: float | None = None) -> InequalityReport:
    """lambda_1 tau_avg(1/4) <= 256 log 2 / q_min^2 under nonnegative
    entropic curvature."""
    from .curvature import lambda1 as _lambda1

    pre = [("entropic_curvature_nonnegative", curvature_status)]
    lamval = _lambda1(chain) if lam is None else lam
    tauval = avg_mixing_time(spectral_decompose(chain), 0.25) if tau is None else tau
    q_min = chain.stats().q_min
    rhs = 256.0 * math.log(2.0) / (q_min * q_min)
    return _report("lambda1_tau_avg", lamval * tauval, rhs, pre,
                   {"lambda1": lamval, "tau": tauval})


def _detect_regular_srw(chain: MarkovChain) -> int | None:
    """Degree d when the chain is the simple random walk on a d-regular graph."""
    if np.abs(np.diag(chain.q)).max() > 0:
        return None
    degs = chain.adjacency.sum(axis=1)
    d = int(degs[0])
    if not (degs == d).all() or d == 0:
        return None
    ex, ey, qe = chain.edges
    if np.abs(qe - 1.0 / d).max() > 1e-12:
        return None
    if np.abs(chain.pi - 1.0 / chain.n_states).max() > 1e-12:
        return None
    return d


def check_expander_bounds(chain: MarkovChain, curvature_status: str = "heuristic",
                          lam: float | None = None) -> list[InequalityReport]:
    """Spectral-gap consequences of nonnegative entropic curvature.

    First: lambda_1 <= (483/q_min^3)(8 pi_max/pi_min)^(1/R0) / R0 (needs
    pi_max < 1/4, q_min < 1).  Second, for the SRW on a d-regular graph with
    |X| >= 4d, d >= 2: d - mu_2 = d lambda_1 <= 4000 d^4 log d / log(|X|/4).
    """
    from .curvature import lambda1 as _lambda1

    st = chain.stats()
    lamval = _lambda1(chain) if lam is None else lam
    out = []

    pre1 = [("entropic_curvature_nonnegative", curvature_status),
            ("pi_max_below_quarter", "exact" if st.pi_max < 0.25 else "unmet"),
            ("q_min_below_one", "exact" if st.q_min < 1.0 else "unmet")]
    if st.pi_max < 0.25 and st.q_min < 1.0:
        r0 = math.log(4.0 * st.pi_max) / math.log(st.q_min)
        rhs = (483.0 / st.q_min ** 3) \
            * (8.0 * st.pi_max / st.pi_min) ** (1.0 / r0) / r0
        out.append(_report("lambda1_upper_bound", lamval, rhs, pre1, {"r0": r0}))
    else:
        nan = float("nan")
        out.append(_report("lambda1_upper_bound", nan, nan, pre1, {}))

    d = _detect_regular_srw(chain)
    size_ok = d is not None and d >= 2 and chain.n_states >= 4 * d
    pre2 = [("entropic_curvature_nonnegative", curvature_status),
            ("regular_srw", "exact" if d is not None else "unmet"),
            ("size_at_least_4d", "exact" if size_ok else "unmet")]
    if size_ok:
        gap = d * lamval                     # d - mu_2 for the SRW generator
        rhs = 4000.0 * d ** 4 * math.log(d) / math.log(chain.n_states / 4.0)
        out.append(_report("regular_spectral_gap", gap, rhs, pre2, {"d": d}))
    else:
        nan = float("nan")
        out.append(_report("regular_spectral_gap", nan, nan, pre2,
                           {"d": d if d is not None else -1}))
    return out
