"""Command-line front end.

Every subcommand ingests a chain (from a JSON/TSV file or a generator spec),
dispatches to the library, and writes a machine-readable JSON report
(schema "curvkit-report/1").  Reports are deterministic for a fixed
(config, seed): no timestamps, sorted keys.

Exit codes: 0 success; 2 invalid input; 3 numerical failure; 4 a `verify`
inequality with exact preconditions does not hold.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import chain as chain_mod
from . import curvature as curv
from . import geometry as geo
from . import heat as heat_mod
from . import optimal as opt
from .gamma import (a_form, b_form, dirac, equilibrium, func_inner,
                    check_geometric_green, gamma2_rho, gamma_rho)
from .errors import CurvkitError, NumericalFailure, PreconditionHeuristic
from .means import BUILTIN_MEANS

SCHEMA = "curvkit-report/1"

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY_FAILED = 4


def _load_chain(args) -> chain_mod.MarkovChain:
    if getattr(args, "gen", None):
        return chain_mod.generate(args.gen, seed=args.seed)
    path = getattr(args, "infile", None)
    if not path:
        raise CurvkitError("either --gen or --in is required")
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith((".tsv", ".txt")):
        return chain_mod.chain_from_edgelist(text)
    return chain_mod.chain_from_json(text)


def _parse_dim(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    value = float(text)
    if value <= 0:
        raise CurvkitError(f"dimension must be positive, got {text}")
    return value


def _parse_rho(chain, spec: str) -> np.ndarray:
    """Density input: 'ones', 'uniform', 'dirac:STATE', inline JSON object
    keyed by state id, or a path to such a JSON file."""
    if spec == "ones":
        return equilibrium(chain)
    if spec == "uniform":
        return (1.0 / chain.n_states) / chain.pi
    if spec.startswith("dirac:"):
        return dirac(chain, spec.split(":", 1)[1])
    if os.path.exists(spec):
        with open(spec, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = json.loads(spec)
    if not isinstance(doc, dict):
        raise CurvkitError("rho JSON must map state ids to values")
    rho = np.zeros(chain.n_states)
    for state, value in doc.items():
        rho[chain.index(state)] = float(value)
    return rho


def _chain_stats_doc(chain) -> dict:
    st = chain.stats()
    return {
        "n_states": chain.n_states,
        "q_min": st.q_min,
        "pi_min": st.pi_min,
        "pi_max": st.pi_max,
        "deg_weighted_max": st.deg_weighted_max,
        "deg_pi_max": st.deg_pi_max,
    }


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _emit(args, config: dict, chain, results: dict, warnings_list: list[str]) -> None:
    report = {
        "schema": SCHEMA,
        "config": _jsonable(config),
        "chain_stats": _chain_stats_doc(chain) if chain is not None else None,
        "results": _jsonable(results),
        "warnings": warnings_list,
    }
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=False)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _float_or_none(v):
    if v is None:
        return None
    return None if not math.isfinite(v) else v


def _curv_result_doc(res: curv.CurvatureResult) -> dict:
    return {
        "value": res.value if math.isfinite(res.value) else repr(res.value),
        "method": res.method,
        "bracket": list(res.bracket) if res.bracket else None,
        "iterations": res.iterations,
        "null_dim": res.null_dim,
        "bisection_value": _float_or_none(res.bisection_value),
        "witness": res.witness.tolist() if res.witness is not None else None,
    }


# -- subcommand handlers ----------------------------------------------------

def _cmd_gen(args):
    chain = chain_mod.generate(args.spec, seed=args.seed)
    doc = chain_mod.chain_to_json(chain)
    _emit(args, {"command": "gen", "spec": args.spec, "seed": args.seed},
          chain, {"chain": doc}, [])
    return EXIT_OK


def _cmd_curv_vertex(args):
    chain = _load_chain(args)
    dim = _parse_dim(args.n)
    per_vertex = {}
    for state in chain.states:
        res = curv.bakry_emery_vertex(chain, state, dim)
        per_vertex[state] = _curv_result_doc(res)
    k_min = min(v["value"] for v in per_vertex.values()
                if isinstance(v["value"], float))
    _emit(args, {"command": "curv-vertex", "n": args.n, "mean": "arithmetic",
                 "seed": args.seed},
          chain, {"per_vertex": per_vertex, "k_global": k_min}, [])
    return EXIT_OK


def _cmd_curv_measure(args):
    chain = _load_chain(args)
    dim = _parse_dim(args.n)
    rho = _parse_rho(chain, args.rho)
    results = {}
    if args.n_grid:
        grid = [_parse_dim(tok) for tok in args.n_grid.split(",")]
        prof = curv.curvature_profile(chain, args.mean, rho, grid)
        results["profile"] = {"points": prof.points,
                              "midpoint_concave": prof.midpoint_concave}
        if args.csv:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write("inv_dim,curvature\n")
                for s, k in prof.points:
                    fh.write(f"{s!r},{k!r}\n")
    res = curv.curvature_of_measure(chain, args.mean, rho, dim)
    results["curvature"] = _curv_result_doc(res)
    _emit(args, {"command": "curv-measure", "n": args.n, "mean": args.mean,
                 "rho": args.rho, "seed": args.seed}, chain, results, [])
    return EXIT_OK


def _cmd_curv_entropic(args):
    chain = _load_chain(args)
    dim = _parse_dim(args.n)
    est = curv.entropic_curvature_estimate(
        chain, dim, starts=args.starts, seed=args.seed)
    _emit(args, {"command": "curv-entropic", "n": args.n, "starts": args.starts,
                 "seed": args.seed}, chain,
          {"k_hat": est.k_hat,
           "rho_star": est.rho_star.tolist(),
           "per_start": [{"k": k, "converged": c} for k, c in est.per_start],
           "certified_nonnegative": est.certified_nonnegative,
           "note": "k_hat is an upper bound on the chain curvature; "
                   "the global infimum is not certified"},
          [])
    return EXIT_OK


def _cmd_spectrum(args):
    chain = _load_chain(args)
    sys_ = heat_mod.spectral_decompose(chain)
    _emit(args, {"command": "spectrum", "seed": args.seed}, chain,
          {"eigenvalues": sys_.eigenvalues.tolist(),
           "lambda1": float(sys_.eigenvalues[1])}, [])
    return EXIT_OK


def _cmd_optimal_sets(args):
    chain = _load_chain(args)
    dim = _parse_dim(args.n)
    cx = opt.optimal_complex(chain, dim)
    _emit(args, {"command": "optimal-sets", "n": args.n, "seed": args.seed},
          chain,
          {"facets": [sorted(f) for f in cx.facets],
           "dimension": cx.dimension,
           "zero_cells": sorted(cx.zero_cells)}, [])
    return EXIT_OK


def _cmd_heat(args):
    chain = _load_chain(args)
    sys_ = heat_mod.spectral_decompose(chain)
    t_grid = [float(tok) for tok in args.t_grid.split(",")]
    rep = heat_mod.check_heat_kernel_bound(sys_, chain, tuple(t_grid))
    results = {"heat_kernel_bound": rep.to_dict()}
    if args.rho:
        rho = _parse_rho(chain, args.rho)
        results["p_t_rho"] = {repr(t): heat_mod.heat_apply(sys_, t, rho).tolist()
                              for t in t_grid}
    _emit(args, {"command": "heat", "t_grid": args.t_grid, "rho": args.rho,
                 "seed": args.seed}, chain, results, [])
    return EXIT_OK


def _cmd_mixing(args):
    chain = _load_chain(args)
    sys_ = heat_mod.spectral_decompose(chain)
    tau = heat_mod.avg_mixing_time(sys_, args.eps)
    _emit(args, {"command": "mixing", "eps": args.eps, "seed": args.seed},
          chain, {"tau_avg": tau}, [])
    return EXIT_OK


def _cmd_dgamma(args):
    chain = _load_chain(args)
    results = {}
    if args.pair:
        u, v = args.pair.split(",")
        results["d_gamma"] = geo.d_gamma(chain, u, v)
    else:
        results["diam_gamma"] = geo.diam_gamma(chain)
        results["diam_combinatorial"] = geo.diam_combinatorial(chain)
    _emit(args, {"command": "dgamma", "pair": args.pair, "seed": args.seed},
          chain, results, [])
    return EXIT_OK


def _cmd_cheeger(args):
    chain = _load_chain(args)
    res = geo.cheeger(chain)
    _emit(args, {"command": "cheeger", "seed": args.seed}, chain,
          {"h": res.h, "argmin_subset": sorted(res.subset)}, [])
    return EXIT_OK


def _run_verify(chain, args):
    """Inequality suites; returns (report dicts, exact-precondition failure?)."""
    results = {}
    reports: list[geo.InequalityReport] = []
    suite = args.suite

    k_arith, _ = curv.bakry_emery_global(chain, math.inf)
    if args.k_ent is not None:
        k_ent, ent_status = args.k_ent, "exact"
    else:
        est = curv.entropic_curvature_estimate(chain, math.inf,
                                               starts=min(args.starts, 16),
                                               seed=args.seed)
        k_ent, ent_status = est.k_hat, "heuristic"
    nonneg_status = (ent_status if k_ent >= -1e-6 else "unmet")
    results["curvature_inputs"] = {
        "k_arithmetic_inf": k_arith,
        "k_entropic": k_ent,
        "k_entropic_status": ent_status,
    }

    if suite in ("identities", "all"):
        rng = np.random.default_rng(args.seed)
        rho = heat_mod._random_density(chain, rng)
        worst_a = worst_b = 0.0
        for _ in range(args.trials):
            f = rng.standard_normal(chain.n_states)
            for mean in BUILTIN_MEANS.values():
                av = a_form(chain, mean, rho, f)
                bv = b_form(chain, mean, rho, f)
                g1 = func_inner(chain, rho, gamma_rho(chain, mean, rho, f))
                g2 = func_inner(chain, rho, gamma2_rho(chain, mean, rho, f))
                worst_a = max(worst_a, abs(av - g1) / max(1.0, abs(g1)))
                worst_b = max(worst_b, abs(bv - g2) / max(1.0, abs(g2)))
        green = check_geometric_green(chain, rho, trials=8, seed=args.seed)
        results["identities"] = {
            "a_form_residual": worst_a,
            "b_form_residual": worst_b,
            "geometric_green_residual": green["geometric"],
            "holds": bool(worst_a <= 1e-11 and worst_b <= 1e-11
                          and green["geometric"] <= 1e-11),
        }

    if suite in ("heat", "all"):
        grad = heat_mod.verify_gradient_estimate(
            chain, "arithmetic", k_arith, math.inf, trials=args.trials,
            seed=args.seed)
        rp = heat_mod.verify_reverse_poincare(
            chain, "arithmetic", k_arith, math.inf, trials=args.trials,
            seed=args.seed)
        sys_ = heat_mod.spectral_decompose(chain)
        hk = heat_mod.check_heat_kernel_bound(sys_, chain)
        results["heat"] = {
            "gradient_estimate": grad.to_dict(),
            "reverse_poincare": rp.to_dict(),
            "heat_kernel_bound": hk.to_dict(),
        }
        if grad.violations or rp.violations or hk.violations:
            results["heat"]["holds"] = False
            reports.append(geo.InequalityReport(
                "heat_suite", 1.0, 0.0, False, -1.0,
                [("curvature_exact", "exact")], {}))
        else:
            results["heat"]["holds"] = True
        if k_ent >= -1e-6:
            linf = heat_mod.check_linf_gradient_bound(
                chain, "logarithmic", trials=args.trials, seed=args.seed,
                curvature_status=nonneg_status)
            results["heat"]["linf_gradient_bound"] = linf.to_dict()

    if suite in ("geometry", "all"):
        try:
            hres = geo.cheeger(chain)
            hval = hres.h
        except Exception:
            hval = None
        lam = curv.lambda1(chain)
        sys_ = heat_mod.spectral_decompose(chain)
        tau = heat_mod.avg_mixing_time(sys_, 0.25)
        geo_reports: list[geo.InequalityReport] = []
        if hval is not None:
            geo_reports.append(geo.check_cheeger_l1(chain, trials=args.trials,
                                                    seed=args.seed, h=hval))
            geo_reports.append(geo.check_buser(chain, nonneg_status, h=hval,
                                               lam=lam))
        geo_reports.append(geo.check_tau_lower_bound(chain, sys_, tau=tau))
        geo_reports.append(geo.check_lambda_tau(chain, nonneg_status, tau=tau,
                                                lam=lam))
        geo_reports.extend(geo.check_expander_bounds(chain, nonneg_status,
                                                     lam=lam))
        diam_g = geo.diam_gamma(chain)
        geo_reports.extend(geo.check_diameter_bound_ent(
            chain, k_ent, ent_status if k_ent > 0 else "unmet", diam_g=diam_g))
        dim_probe = 2.0 * chain.n_states
        k_fin, _ = curv.bakry_emery_global(chain, dim_probe)
        geo_reports.extend(geo.check_diameter_bound_finite_n(
            chain, "arithmetic", k_fin, dim_probe,
            "exact" if k_fin > 0 else "unmet", diam_g=diam_g))
        results["geometry"] = [r.to_dict() for r in geo_reports]
        reports.extend(geo_reports)

    exact_failure = any(
        r.holds is False and all(s == "exact" for _, s in r.preconditions)
        for r in reports)
    if suite in ("identities", "all") and not results["identities"]["holds"]:
        exact_failure = True
    if suite in ("heat", "all") and not results["heat"]["holds"]:
        exact_failure = True
    return results, exact_failure


def _cmd_verify(args):
    chain = _load_chain(args)
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always", PreconditionHeuristic)
        results, exact_failure = _run_verify(chain, args)
    warn_msgs = sorted({str(w.message) for w in wlist
                        if issubclass(w.category, (PreconditionHeuristic, UserWarning))})
    _emit(args, {"command": "verify", "suite": args.suite,
                 "trials": args.trials, "seed": args.seed,
                 "k_ent": args.k_ent, "starts": args.starts},
          chain, results, warn_msgs)
    return EXIT_VERIFY_FAILED if exact_failure else EXIT_OK


def _add_common(p, with_input=True):
    if with_input:
        src = p.add_mutually_exclusive_group()
        src.add_argument("--gen", help="generator spec, e.g. hypercube:3")
        src.add_argument("--in", dest="infile", help="chain JSON or edge-list TSV")
    p.add_argument("--seed", type=int,
                   default=int(os.environ.get("CURVKIT_SEED", "0")),
                   help="random seed (env CURVKIT_SEED overrides the default)")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker cap; solvers are deterministic and reduce in "
                        "index order, so results never depend on this")
    p.add_argument("--out", help="write the JSON report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="curvkit",
        description="curvature toolkit for finite reversible Markov chains")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="emit a generated chain as JSON")
    p.add_argument("spec", help="hypercube:N | cycle:n | complete:n | path:n "
                                "| random-regular:d:n[:seed]")
    _add_common(p, with_input=False)
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("curv-vertex", help="vertex curvature at every state")
    p.add_argument("--n", default="inf", help='dimension ("inf" or positive float)')
    _add_common(p)
    p.set_defaults(fn=_cmd_curv_vertex)

    p = sub.add_parser("curv-measure", help="curvature of a density")
    p.add_argument("--n", default="inf")
    p.add_argument("--mean", default="arithmetic", choices=sorted(BUILTIN_MEANS))
    p.add_argument("--rho", default="ones",
                   help='"ones", "uniform", "dirac:STATE", JSON object, or file')
    p.add_argument("--n-grid", help="comma list of dimensions for a profile")
    p.add_argument("--csv", help="flatten the profile to CSV")
    _add_common(p)
    p.set_defaults(fn=_cmd_curv_measure)

    p = sub.add_parser("curv-entropic", help="multi-start entropic estimate")
    p.add_argument("--n", default="inf")
    p.add_argument("--starts", type=int, default=32)
    _add_common(p)
    p.set_defaults(fn=_cmd_curv_entropic)

    p = sub.add_parser("spectrum", help="eigenvalues of minus the Laplacian")
    _add_common(p)
    p.set_defaults(fn=_cmd_spectrum)

    p = sub.add_parser("optimal-sets", help="maximal optimal sets")
    p.add_argument("--n", default="inf")
    _add_common(p)
    p.set_defaults(fn=_cmd_optimal_sets)

    p = sub.add_parser("heat", help="heat kernel diagnostics")
    p.add_argument("--t-grid", default="0.1,0.5,1.0,2.0")
    p.add_argument("--rho", help="optional density to evolve")
    _add_common(p)
    p.set_defaults(fn=_cmd_heat)

    p = sub.add_parser("mixing", help="average mixing time")
    p.add_argument("--eps", type=float, default=0.25)
    _add_common(p)
    p.set_defaults(fn=_cmd_mixing)

    p = sub.add_parser("dgamma", help="intrinsic metric")
    p.add_argument("--pair", help="comma pair of states; omit for the diameter")
    _add_common(p)
    p.set_defaults(fn=_cmd_dgamma)

    p = sub.add_parser("cheeger", help="exact Cheeger constant")
    _add_common(p)
    p.set_defaults(fn=_cmd_cheeger)

    p = sub.add_parser("verify", help="inequality suites")
    p.add_argument("--suite", default="all",
                   choices=["identities", "heat", "geometry", "all"])
    p.add_argument("--trials", type=int, default=25)
    p.add_argument("--starts", type=int, default=8,
                   help="optimizer starts for the entropic curvature input")
    p.add_argument("--k-ent", type=float, default=None,
                   help="known entropic curvature bound (treated as exact)")
    _add_common(p)
    p.set_defaults(fn=_cmd_verify)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_INPUT if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (CurvkitError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
