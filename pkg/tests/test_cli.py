"""CLI: subcommand contracts, exit codes, report determinism."""

import json

import pytest

from curvkit.cli import main


def run_cli(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = main(list(argv) + ["--out", str(out)])
    doc = json.loads(out.read_text()) if out.exists() else None
    return code, doc


def test_gen_writes_chain(tmp_path):
    code, doc = run_cli(tmp_path, "gen", "cycle:5")
    assert code == 0
    assert doc["schema"] == "curvkit-report/1"
    chain = doc["results"]["chain"]
    assert len(chain["states"]) == 5
    assert chain["pi"] == pytest.approx([0.2] * 5)


def test_curv_vertex_hypercube(tmp_path):
    code, doc = run_cli(tmp_path, "curv-vertex", "--gen", "hypercube:3",
                        "--n", "inf")
    assert code == 0
    per_vertex = doc["results"]["per_vertex"]
    assert len(per_vertex) == 8
    for rec in per_vertex.values():
        assert rec["value"] == pytest.approx(2 / 3, abs=1e-8)
    assert doc["results"]["k_global"] == pytest.approx(2 / 3, abs=1e-8)


def test_curv_measure_with_profile_csv(tmp_path):
    csv = tmp_path / "profile.csv"
    code, doc = run_cli(tmp_path, "curv-measure", "--gen", "hypercube:2",
                        "--rho", "dirac:00", "--mean", "arithmetic",
                        "--n", "inf", "--n-grid", "inf,4,2", "--csv", str(csv))
    assert code == 0
    assert doc["results"]["curvature"]["value"] == pytest.approx(1.0, abs=1e-8)
    rows = csv.read_text().strip().splitlines()
    assert rows[0] == "inv_dim,curvature"
    assert len(rows) == 4


def test_curv_measure_rho_inline_json(tmp_path):
    code, doc = run_cli(tmp_path, "curv-measure", "--gen", "cycle:5",
                        "--rho", '{"0": 1.0, "1": 2.0, "2": 1.0, "3": 1.0, "4": 1.0}',
                        "--mean", "logarithmic")
    assert code == 0


def test_curv_measure_zero_rho_open_mean_exit2(tmp_path):
    code, _ = run_cli(tmp_path, "curv-measure", "--gen", "cycle:5",
                      "--rho", "dirac:0", "--mean", "logarithmic")
    assert code == 2


def test_curv_entropic(tmp_path):
    code, doc = run_cli(tmp_path, "curv-entropic", "--gen", "hypercube:1",
                        "--starts", "4", "--seed", "5")
    assert code == 0
    assert doc["results"]["k_hat"] == pytest.approx(2.0, abs=1e-3)
    assert doc["results"]["certified_nonnegative"]


def test_spectrum(tmp_path):
    code, doc = run_cli(tmp_path, "spectrum", "--gen", "cycle:4")
    assert code == 0
    assert doc["results"]["lambda1"] == pytest.approx(1.0, abs=1e-10)


def test_optimal_sets(tmp_path):
    code, doc = run_cli(tmp_path, "optimal-sets", "--gen", "cycle:6")
    assert code == 0
    facets = [tuple(f) for f in doc["results"]["facets"]]
    assert len(facets) == 6
    assert doc["results"]["dimension"] == 1


def test_heat_and_mixing(tmp_path):
    code, doc = run_cli(tmp_path, "heat", "--gen", "hypercube:2",
                        "--t-grid", "0.1,1.0", "--rho", "ones")
    assert code == 0
    assert doc["results"]["heat_kernel_bound"]["violations"] == 0
    code, doc = run_cli(tmp_path, "mixing", "--gen", "hypercube:1",
                        "--eps", "0.25")
    assert code == 0
    import math
    assert doc["results"]["tau_avg"] == pytest.approx(math.log(4) / 2, abs=1e-8)


def test_dgamma_pair(tmp_path):
    code, doc = run_cli(tmp_path, "dgamma", "--gen", "hypercube:1",
                        "--pair", "0,1")
    assert code == 0
    import math
    assert doc["results"]["d_gamma"] == pytest.approx(math.sqrt(2), abs=1e-8)


def test_cheeger_cmd(tmp_path):
    code, doc = run_cli(tmp_path, "cheeger", "--gen", "hypercube:3")
    assert code == 0
    assert doc["results"]["h"] == pytest.approx(1 / 3, abs=1e-12)


def test_verify_hypercube2_exit0(tmp_path):
    code, doc = run_cli(tmp_path, "verify", "--gen", "hypercube:2",
                        "--suite", "all", "--seed", "1")
    assert code == 0
    assert doc["results"]["identities"]["holds"]
    assert doc["results"]["heat"]["holds"]
    for rep in doc["results"]["geometry"]:
        assert rep["holds"] in (True, None)
        for pre in rep["preconditions"]:
            assert pre["status"] in ("exact", "heuristic", "unmet")


def test_verify_deterministic(tmp_path):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    assert main(["verify", "--gen", "cycle:5", "--suite", "geometry",
                 "--seed", "7", "--out", str(out1)]) == 0
    assert main(["verify", "--gen", "cycle:5", "--suite", "geometry",
                 "--seed", "7", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_bad_input_exit2(tmp_path):
    code, _ = run_cli(tmp_path, "curv-vertex", "--gen", "moebius:7")
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"Q": [[0.4, 0.5], [0.5, 0.5]]}')
    code2 = main(["curv-vertex", "--in", str(bad)])
    assert code2 == 2
    code3 = main(["curv-vertex", "--in", str(tmp_path / "missing.json")])
    assert code3 == 2


def test_env_seed_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CURVKIT_SEED", "123")
    code, doc = run_cli(tmp_path, "verify", "--gen", "hypercube:1",
                        "--suite", "identities")
    assert code == 0
    assert doc["config"]["seed"] == 123


def test_tsv_input(tmp_path):
    tsv = tmp_path / "chain.tsv"
    tsv.write_text("a\tb\t1.0\nb\tc\t1.0\n")
    code, doc = run_cli(tmp_path, "spectrum", "--in", str(tsv))
    assert code == 0
    assert doc["chain_stats"]["n_states"] == 3
