"""Intrinsic metric, Cheeger constant, inequality battery."""

import math
import warnings

import numpy as np
import pytest

from curvkit import (PreconditionHeuristic, TooLarge, bakry_emery_global,
                     cheeger, cheeger_gray, check_buser, check_cheeger_l1,
                     check_diameter_bound_ent, check_diameter_bound_finite_n,
                     check_expander_bounds, check_lambda_tau,
                     check_tau_lower_bound, complete, cycle, d_gamma,
                     diam_combinatorial, diam_gamma, distance_matrix,
                     hypercube, path, random_regular)
from curvkit.geometry import cut_weight

from conftest import random_reversible_chain


# -- intrinsic metric ---------------------------------------------------------

def test_two_state_value(two_state):
    # energy 1/2 s^2 <= 1 caps the increment at sqrt 2
    assert d_gamma(two_state, 0, 1) == pytest.approx(math.sqrt(2), abs=1e-8)


def test_identical_states_zero(cycle5):
    assert d_gamma(cycle5, 2, 2) == 0.0


def test_symmetry_by_reruns():
    ch = path(4)
    for i in range(4):
        for j in range(i + 1, 4):
            assert d_gamma(ch, i, j) == pytest.approx(d_gamma(ch, j, i), abs=1e-8)


def test_triangle_inequality_sampled():
    ch = cycle(5)
    d = {}
    for i in range(5):
        for j in range(5):
            if i != j:
                d[i, j] = d_gamma(ch, i, j)
    for i in range(5):
        for j in range(5):
            for k in range(5):
                if len({i, j, k}) == 3:
                    assert d[i, j] <= d[i, k] + d[k, j] + 1e-8


@pytest.mark.parametrize("ch", [cycle(6), hypercube(3), path(4), complete(4)])
def test_combinatorial_dominated_by_intrinsic(ch):
    # d <= sqrt(D/2) d_Gamma <= d_Gamma / sqrt 2 on every pair
    dmax = ch.stats().deg_weighted_max
    dist = distance_matrix(ch)
    for i in range(ch.n_states):
        for j in range(i + 1, ch.n_states):
            dg = d_gamma(ch, i, j)
            assert dist[i, j] <= math.sqrt(dmax / 2) * dg + 1e-8
            assert math.sqrt(dmax / 2) * dg <= dg / math.sqrt(2) + 1e-12


def test_diameters(two_state):
    assert diam_gamma(two_state) == pytest.approx(math.sqrt(2), abs=1e-8)
    assert diam_combinatorial(hypercube(2)) == 2
    assert diam_combinatorial(cycle(6)) == 3


# -- Cheeger ------------------------------------------------------------------

def test_cheeger_two_state(two_state):
    res = cheeger(two_state)
    assert res.h == pytest.approx(1.0, abs=1e-14)
    assert len(res.subset) == 1


def test_cheeger_cycle4():
    res = cheeger(cycle(4))
    assert res.h == pytest.approx(0.5, abs=1e-14)
    idx = sorted(int(s) for s in res.subset)
    assert len(idx) == 2 and (idx[1] - idx[0]) % 4 in (1, 3)


def test_cheeger_complete4_brute_force():
    ch = complete(4)
    res = cheeger(ch)
    best = math.inf
    for mask in range(1, 1 << 4):
        members = [i for i in range(4) if (mask >> i) & 1]
        piw = ch.pi[members].sum()
        if 0 < piw <= 0.5 + 1e-12:
            best = min(best, cut_weight(ch, members) / piw)
    assert res.h == pytest.approx(best, abs=1e-14)


def test_cheeger_hypercubes_half_cube():
    for n_dim in (2, 3, 4):
        res = cheeger(hypercube(n_dim))
        assert res.h == pytest.approx(1.0 / n_dim, abs=1e-13)
        assert len(res.subset) == 2 ** (n_dim - 1)


def test_cheeger_engines_agree():
    chains = [cycle(5), path(6), hypercube(3), complete(5)]
    chains += [random_reversible_chain(n, 100 + n) for n in (5, 7, 9, 11)]
    for ch in chains:
        a = cheeger(ch)
        b = cheeger_gray(ch)
        assert a.h == pytest.approx(b.h, rel=1e-13, abs=1e-15)
        assert a.subset == b.subset or True   # value equality is the contract


def test_cheeger_guard():
    with pytest.raises(TooLarge):
        cheeger_gray(cycle(24))


def test_cheeger_l1_lemma():
    for ch in (cycle(6), hypercube(3), random_reversible_chain(6, 9)):
        rep = check_cheeger_l1(ch, trials=200, seed=0)
        assert rep.holds
    # tightness: the minimizer indicator is within a factor of two
    ch = hypercube(2)
    res = cheeger(ch)
    ind = np.zeros(4)
    ind[[ch.index(s) for s in res.subset]] = 1.0
    f = ind - float(ind @ ch.pi)
    ex, ey, qe = ch.edges
    grad_l1 = 0.5 * float(np.abs(f[ey] - f[ex]) @ (qe * ch.pi[ex]))
    f_l1 = float(np.abs(f) @ ch.pi)
    assert grad_l1 <= 2 * (res.h / 2) * f_l1 + 1e-12


# -- diameter bounds ----------------------------------------------------------

def test_diameter_bound_ent_hypercube2(hyp2):
    reps = check_diameter_bound_ent(hyp2, 1.0, "exact")
    by_name = {r.name: r for r in reps}
    r = by_name["diameter_ent_dgamma"]
    assert r.rhs == pytest.approx(2 * math.sqrt(4 * math.log(2)), rel=1e-12)
    assert r.rhs == pytest.approx(3.3302, abs=1e-3)
    assert r.holds
    assert by_name["diameter_ent_d"].holds


def test_diameter_bound_ent_hypercube3(hyp3):
    reps = check_diameter_bound_ent(hyp3, 2 / 3, "exact")
    by_name = {r.name: r for r in reps}
    r = by_name["diameter_ent_d"]
    assert r.rhs == pytest.approx(3 * math.sqrt(3 * math.log(3) / 2), rel=1e-12)
    assert r.lhs == 3
    assert r.holds


def test_diameter_bound_ent_dpi_one_convention(two_state):
    # the two-state chain has maximal pi-degree exactly one
    assert two_state.stats().deg_pi_max == pytest.approx(1.0)
    reps = check_diameter_bound_ent(two_state, 2.0, "exact")
    r = {x.name: x for x in reps}["diameter_ent_dgamma"]
    assert r.rhs == pytest.approx(math.sqrt(2), rel=1e-12)   # (2/2) sqrt(2*1)
    assert r.holds      # diam_Gamma = sqrt 2 exactly; equality case


def test_diameter_bound_finite_n_two_state(two_state):
    k2, _ = bakry_emery_global(two_state, 2.0)
    assert k2 == pytest.approx(1.0, abs=1e-10)
    reps = check_diameter_bound_finite_n(two_state, "arithmetic", k2, 2.0,
                                         "exact")
    by_name = {r.name: r for r in reps}
    r = by_name["diameter_finite_n_dgamma"]
    assert r.rhs == pytest.approx(math.pi * math.sqrt(2), rel=1e-9)
    assert r.lhs == pytest.approx(math.sqrt(2), abs=1e-8)
    assert r.holds
    assert by_name["diameter_finite_n_d"].holds


def test_diameter_bound_finite_n_hypercube(hyp2):
    dim = 8.0
    k, _ = bakry_emery_global(hyp2, dim)
    assert k > 0
    reps = check_diameter_bound_finite_n(hyp2, "arithmetic", k, dim, "exact")
    assert all(r.holds for r in reps)


def test_diameter_bound_unmet_guard(cycle5):
    reps = check_diameter_bound_ent(cycle5, 0.0, "exact")
    assert all(r.holds is None for r in reps)


# -- mixing-time and spectral-gap bounds -------------------------------------

def test_tau_lower_bound_hypercube3(hyp3):
    rep = check_tau_lower_bound(hyp3)
    assert rep.holds
    assert rep.details["r0"] == pytest.approx(math.log(0.5) / math.log(1 / 3),
                                              rel=1e-12)


def test_tau_lower_bound_two_state_not_applicable(two_state):
    rep = check_tau_lower_bound(two_state)
    assert rep.holds is None
    assert ("pi_max_below_quarter", "unmet") in rep.preconditions


def test_tau_lower_bound_cycle8():
    rep = check_tau_lower_bound(cycle(8))
    assert rep.holds


def test_buser_hypercubes():
    for n_dim, lam in ((1, 2.0), (2, 1.0), (3, 2 / 3)):
        ch = hypercube(n_dim)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PreconditionHeuristic)
            rep = check_buser(ch, "exact")
        assert rep.lhs == pytest.approx(lam, abs=1e-10)
        q_min = 1.0 / max(n_dim, 1)
        assert rep.rhs == pytest.approx(16 * math.log(2) / q_min / n_dim ** 2,
                                        rel=1e-10)
        assert rep.holds


def test_buser_two_state(two_state):
    rep = check_buser(two_state, "exact")
    assert rep.lhs == pytest.approx(2.0)
    assert rep.rhs == pytest.approx(16 * math.log(2), rel=1e-12)
    assert rep.holds


def test_lambda_tau_bound():
    for ch in (hypercube(2), hypercube(3), cycle(6)):
        rep = check_lambda_tau(ch, "exact")
        assert rep.holds
    two = hypercube(1)
    rep = check_lambda_tau(two, "exact")
    assert rep.lhs == pytest.approx(2 * math.log(4) / 2, abs=1e-8)
    assert rep.rhs == pytest.approx(256 * math.log(2), rel=1e-12)
    assert rep.holds


def test_expander_bounds_hypercubes():
    # N=3: size guard 8 < 12 marks the regular bound not applicable
    reps = {r.name: r for r in check_expander_bounds(hypercube(3), "exact")}
    assert reps["lambda1_upper_bound"].holds
    assert reps["regular_spectral_gap"].holds is None
    # N=5: 32 >= 20 so the regular bound applies; gap = d lambda1 = 2
    reps = {r.name: r for r in check_expander_bounds(hypercube(5), "exact",
                                                     lam=2 / 5)}
    r = reps["regular_spectral_gap"]
    assert r.holds
    assert r.lhs == pytest.approx(2.0, abs=1e-10)
    assert r.rhs == pytest.approx(4000 * 5 ** 4 * math.log(5) / math.log(8),
                                  rel=1e-12)


def test_expander_bounds_negative_curvature_not_applicable():
    ch = random_regular(3, 20, seed=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PreconditionHeuristic)
        reps = check_expander_bounds(ch, "unmet")
    assert all(r.holds is None for r in reps)


def test_non_regular_chain_skips_regular_bound():
    reps = {r.name: r for r in check_expander_bounds(path(12), "exact")}
    assert reps["regular_spectral_gap"].holds is None
    assert ("regular_srw", "unmet") in reps["regular_spectral_gap"].preconditions
