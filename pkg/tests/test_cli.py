import json
import math

import numpy as np
import pytest

from smallball.cli import run


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def test_spectrum_csv(tmp_path):
    out = tmp_path / "spec.csv"
    rep = tmp_path / "rep.json"
    code = run(
        ["spectrum", "--kernel", "bridge", "--n", "400", "--k", "5",
         "--out", str(out), "--report", str(rep)]
    )
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "k,mu_k"
    mu1 = float(lines[1].split(",")[1])
    assert mu1 == pytest.approx(1.0 / math.pi**2, rel=1e-4)
    report = read_json(rep)
    assert report["task"] == "spectrum"
    assert len(report["results"]["eigenvalues"]) == 5
    assert "weighted_trace" in report["diagnostics"]


def test_spectrum_eigvec_export(tmp_path):
    out = tmp_path / "vec.csv"
    code = run(
        ["spectrum", "--kernel", "wiener", "--n", "50", "--k", "2",
         "--eigvecs-out", str(out), "--report", str(tmp_path / "r.json")]
    )
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "node,u_1,u_2"
    assert len(lines) == 51


def test_exact_gilpelaez(tmp_path):
    wfile = tmp_path / "w.csv"
    wfile.write_text("1.0\n")
    rep = tmp_path / "rep.json"
    code = run(["exact", "--weights", str(wfile), "--r", "1.0", "--report", str(rep)])
    assert code == 0
    report = read_json(rep)
    assert report["results"]["value"] == pytest.approx(0.6826895, abs=1e-5)
    assert "error_bound" in report["diagnostics"]


def test_exact_tail_header(tmp_path):
    wfile = tmp_path / "w.csv"
    wfile.write_text("# tail_sum_bound=0.25\n1.0\n0.5\n")
    rep = tmp_path / "rep.json"
    assert run(["exact", "--weights", str(wfile), "--r", "1.0", "--report", str(rep)]) == 0
    assert read_json(rep)["inputs"]["tail_sum_bound"] == 0.25


def test_exact_mc_determinism(tmp_path):
    wfile = tmp_path / "w.csv"
    wfile.write_text("0.5\n0.25\n")
    reps = []
    for name in ("a.json", "b.json"):
        rep = tmp_path / name
        code = run(
            ["exact", "--weights", str(wfile), "--r", "0.5", "--method", "mc",
             "--samples", "20000", "--seed", "3", "--report", str(rep)]
        )
        assert code == 0
        reps.append(read_json(rep)["results"]["value"])
    assert reps[0] == reps[1]


def test_asymptotic_naznik(tmp_path):
    rep = tmp_path / "rep.json"
    code = run(
        ["asymptotic", "--law", "naznik", "--theta", "3.14159265", "--delta", "-0.5",
         "--d", "2", "--eps", "0.05", "--report", str(rep)]
    )
    assert code == 0
    report = read_json(rep)
    # the near-pi literal is snapped to the exact constant
    assert report["inputs"]["theta"] == math.pi
    expected = math.log(4.0 / math.sqrt(math.pi)) + math.log(0.05) - 50.0
    assert report["results"]["log_probability"] == pytest.approx(expected, abs=1e-9)
    assert report["results"]["amplitude"] == pytest.approx(4.0 / math.sqrt(math.pi), rel=1e-12)


def test_asymptotic_dll(tmp_path):
    rep = tmp_path / "rep.json"
    code = run(
        ["asymptotic", "--law", "dll", "--phi", "power:3.14159265,0,2", "--r", "0.01",
         "--report", str(rep)]
    )
    assert code == 0
    report = read_json(rep)
    assert report["results"]["log_probability"] < -10
    assert report["results"]["tilt"] > 0


def test_perturb_classify_and_factors(tmp_path):
    cfg = {
        "kernel": {"type": "bridge"},
        "grid_size": 500,
        "phi": [{"poly": [1.0]}],
        "A": [[6.0]],
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    rep = tmp_path / "rep.json"
    code = run(["perturb", "--config", str(cfg_path), "--theorem1", "--report", str(rep)])
    assert code == 0
    report = read_json(rep)
    assert report["results"]["classification"] == "non_critical"
    assert report["results"]["Q"][0][0] == pytest.approx(1.0 / 12.0, abs=1e-9)
    assert report["results"]["theorem1_factor"] == pytest.approx(2.0, rel=1e-8)


def test_perturb_critical_theorem3(tmp_path):
    cfg = {
        "kernel": {"type": "bridge"},
        "grid_size": 500,
        "phi": [{"poly": [1.0]}],
        "A": [[12.0]],
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    rep = tmp_path / "rep.json"
    code = run(
        ["perturb", "--config", str(cfg_path), "--theorem3", "--eps", "0.1", "--report", str(rep)]
    )
    assert code == 0
    report = read_json(rep)
    assert report["results"]["classification"] == "critical"
    assert report["results"]["critical_prefactor"] == pytest.approx(1.0 / (2 * math.sqrt(3)), rel=1e-8)
    assert report["results"]["theorem3_factor"] == pytest.approx(14.43375673, rel=1e-6)


def test_perturb_partially_critical_reports_no_factor(tmp_path):
    # sampled identity-like kernel with two orthonormal functions, one
    # critical direction: classification plus a pointer, never a factor
    n = 64
    nodes = (np.arange(1, n + 1) - 0.5) / n
    weights = np.full(n, 1.0 / n)
    cfg = {
        "kernel": {
            "type": "sampled",
            "grid": nodes.tolist(),
            "weights": weights.tolist(),
            "matrix": (np.eye(n) * n).tolist(),
        },
        "phi": [
            {"samples": (np.sqrt(2) * np.sin(np.pi * nodes)).tolist()},
            {"samples": (np.sqrt(2) * np.sin(2 * np.pi * nodes)).tolist()},
        ],
        "A": [[1.0, 0.0], [0.0, 0.0]],
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    rep = tmp_path / "rep.json"
    assert run(["perturb", "--config", str(cfg_path), "--classify", "--report", str(rep)]) == 0
    report = read_json(rep)
    assert report["results"]["classification"] == "partially_critical"
    assert report["results"]["rank_defect"] == 1
    assert "note" in report["results"]
    assert "theorem3_factor" not in report["results"]


def test_durbin_fisher(tmp_path):
    rep = tmp_path / "rep.json"
    code = run(["durbin", "--family", "normal-location-scale", "--fisher", "--report", str(rep)])
    assert code == 0
    report = read_json(rep)
    s = np.asarray(report["results"]["fisher"])
    np.testing.assert_allclose(s, np.diag([1.0, 2.0]), atol=1e-6)
    assert report["results"]["classification"] == "critical"


def test_durbin_simulate_csv_determinism(tmp_path):
    outs = []
    for name in ("s1.csv", "s2.csv"):
        out = tmp_path / name
        code = run(
            ["durbin", "--family", "exponential-rate", "--simulate", "--n", "50",
             "--reps", "200", "--seed", "5", "--out", str(out),
             "--report", str(tmp_path / (name + ".json"))]
        )
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    report = read_json(tmp_path / "s1.csv.json")
    assert "mean" in report["results"]
    assert "q10" in report["results"]["quantiles"]


def test_validate_core(tmp_path):
    rep = tmp_path / "rep.json"
    assert run(["validate", "--suite", "core", "--report", str(rep)]) == 0
    report = read_json(rep)
    assert report["results"]["passed"] is True


def test_exit_codes(tmp_path):
    assert run(["nonsense"]) == 2
    assert run([]) == 2
    # argument error inside a subcommand
    wfile = tmp_path / "w.csv"
    wfile.write_text("1.0\n")
    assert run(["exact", "--weights", str(wfile), "--r", "-1.0"]) == 2
    # missing file
    assert run(["exact", "--weights", str(tmp_path / "absent.csv"), "--r", "1.0"]) == 2


def test_config_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 60, "k": 3}))
    rep = tmp_path / "rep.json"
    code = run(
        ["spectrum", "--kernel", "bridge", "--n", "2", "--k", "1",
         "--config", str(cfg), "--report", str(rep)]
    )
    assert code == 0
    assert len(read_json(rep)["results"]["eigenvalues"]) == 3
    assert read_json(rep)["inputs"]["n"] == 60


def test_report_deterministic_modulo_timestamp(tmp_path):
    reps = []
    for name in ("r1.json", "r2.json"):
        rep = tmp_path / name
        assert run(
            ["asymptotic", "--law", "naznik", "--theta", "3.14159265", "--delta", "0",
             "--d", "2", "--eps", "0.05", "--report", str(rep)]
        ) == 0
        data = read_json(rep)
        data.pop("timestamp")
        reps.append(json.dumps(data, sort_keys=True))
    assert reps[0] == reps[1]
