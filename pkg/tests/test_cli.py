"""End-to-end checks of the command-line pipeline and file formats."""

import json

import numpy as np
import pytest

from henon_morse.cli import main
from henon_morse.io import (
    load_profile,
    load_transformed,
    params_from_dict,
    params_to_dict,
    save_profile,
    save_transformed,
)
from henon_morse.halfline import transform_profile
from henon_morse.nonlinearity import pure_power
from henon_morse.radial_bvp import ProblemParams, RadialProfile, integrate_radial_ivp


def write_params(path, **overrides):
    base = {"N": 3, "alpha": 0.0, "mu1": 0.0, "mu2": 0.0,
            "family": "pure_power", "p": 4, "a1": 1.0, "a2": 1.0, "b": 0.0,
            "branch": "positive"}
    base.update(overrides)
    path.write_text(json.dumps(base))
    return base


def strip_created(text):
    return "\n".join(line for line in text.splitlines() if '"created"' not in line)


def test_params_round_trip():
    d = {"N": 2, "alpha": 4.0, "mu1": 0.1, "mu2": 0.2,
         "family": "quartic_coupled", "p": 4, "a1": 1.0, "a2": 1.0, "b": 0.5}
    params = params_from_dict(d)
    assert params_to_dict(params) == d


def test_profile_file_round_trip(tmp_path, solve):
    prof = solve(2, 4.0)
    save_profile(prof, tmp_path / "p")
    loaded = load_profile(tmp_path / "p")
    assert np.allclose(loaded.u, prof.u)
    assert np.allclose(loaded.du, prof.du)
    assert loaded.params == prof.params
    assert loaded.amplitude == prof.amplitude


def test_transformed_file_round_trip(tmp_path, solve):
    tp = transform_profile(solve(2, 4.0), T=30.0, grid_size=2000)
    save_transformed(tp, tmp_path / "t")
    loaded = load_transformed(tmp_path / "t")
    assert np.allclose(loaded.u, tp.u)
    assert loaded.beta == tp.beta
    assert loaded.gamma == tp.gamma
    header = json.loads((tmp_path / "t.json").read_text())
    assert header["pohozaev"]["lhs"] > 0
    assert "rhs" in header["pohozaev"]


def test_solve_writes_certified_profile(tmp_path):
    pfile = tmp_path / "params.json"
    write_params(pfile)
    rc = main(["solve", "--params", str(pfile), "--out", str(tmp_path / "run"),
               "--grid", "2000"])
    assert rc == 0
    header = json.loads((tmp_path / "run" / "profile.json").read_text())
    assert header["relative_residual"] <= 1e-6
    assert header["amplitude"][0] == pytest.approx(6.8968486, rel=1e-6)


def test_solve_deterministic_modulo_timestamp(tmp_path):
    pfile = tmp_path / "params.json"
    write_params(pfile, alpha=1.0)
    main(["solve", "--params", str(pfile), "--out", str(tmp_path / "a"),
          "--grid", "1000"])
    main(["solve", "--params", str(pfile), "--out", str(tmp_path / "b"),
          "--grid", "1000"])
    ja = strip_created((tmp_path / "a" / "profile.json").read_text())
    jb = strip_created((tmp_path / "b" / "profile.json").read_text())
    assert ja == jb
    assert (tmp_path / "a" / "profile.csv").read_text() == \
        (tmp_path / "b" / "profile.csv").read_text()


def test_solve_malformed_params(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--params", str(bad), "--out", str(tmp_path / "x")]) == 2
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"N": 3}))
    assert main(["solve", "--params", str(missing), "--out", str(tmp_path / "y")]) == 2


def test_solve_unsolvable_regime(tmp_path):
    pfile = tmp_path / "params.json"
    write_params(pfile, p=8)  # ball-supercritical
    rc = main(["solve", "--params", str(pfile), "--out", str(tmp_path / "run"),
               "--grid", "1000", "--tol", "1e-8"])
    assert rc == 1


def test_verify_certified_profile(tmp_path, solve):
    save_profile(solve(2, 4.0), tmp_path / "profile")
    rc = main(["verify", "--profile", str(tmp_path / "profile"),
               "--out", str(tmp_path / "report.json"), "--mesh", "600"])
    assert rc == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["pass"] is True
    assert report["checks"]["radial_residual"]["pass"]
    assert report["checks"]["transformed_residual"]["pass"]
    assert report["checks"]["pohozaev_slack"]["pass"]
    assert report["checks"]["pohozaev_lower_bound"]["pass"]
    assert report["checks"]["qk_probe_min"]["pass"]


def test_verify_detects_corruption(tmp_path, solve):
    prof = solve(2, 4.0)
    bad = RadialProfile(prof.params, prof.grid, 1.1 * prof.u, prof.v,
                        1.1 * prof.du, prof.dv,
                        (1.1 * prof.amplitude[0], 0.0))
    save_profile(bad, tmp_path / "profile")
    rc = main(["verify", "--profile", str(tmp_path / "profile"),
               "--out", str(tmp_path / "report.json"), "--mesh", "600"])
    assert rc == 1
    report = json.loads((tmp_path / "report.json").read_text())
    assert not report["checks"]["radial_residual"]["pass"]
    assert not report["checks"]["transformed_residual"]["pass"]


def test_verify_trivial_profile(tmp_path):
    params = ProblemParams(N=3, alpha=0.0, mu1=0.0, mu2=0.0, f=pure_power(4))
    zero = integrate_radial_ivp(params, (0.0, 0.0), 500)
    save_profile(zero, tmp_path / "profile")
    rc = main(["verify", "--profile", str(tmp_path / "profile"),
               "--out", str(tmp_path / "report.json")])
    assert rc == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["trivial"] is True


def test_verify_missing_profile(tmp_path):
    assert main(["verify", "--profile", str(tmp_path / "nope")]) == 2


def test_sweep_rows_and_summary(tmp_path):
    pfile = tmp_path / "params.json"
    base = {"N": 2, "mu1": 0.0, "mu2": 0.0, "family": "pure_power", "p": 4,
            "a1": 1.0, "a2": 1.0, "b": 0.0,
            "alphas": [2.0, 0.0], "branches": ["positive"]}
    pfile.write_text(json.dumps(base))
    rc = main(["sweep", "--params", str(pfile), "--out", str(tmp_path / "sw"),
               "--grid", "2000", "--mesh", "500"])
    assert rc == 0
    payload = json.loads((tmp_path / "sw" / "sweep.json").read_text())
    rows = payload["rows"]
    assert [r["alpha"] for r in rows] == [0.0, 2.0]  # sorted ascending
    for row in rows:
        assert row["status"] == "ok"
        assert row["total_morse_index"] >= 1
        assert row["mesh_stable"] is True
        # the certified truncation degree appears with zero count
        last = row["morse"]["per_ell"][-1]
        assert last["negatives"] == 0
    assert payload["summary"]["smallest_alpha_with_index_above_1"] == 2.0
    csv_lines = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()
    assert len(csv_lines) == 3


def test_sweep_nodal_branch(tmp_path):
    pfile = tmp_path / "params.json"
    base = {"N": 2, "mu1": 0.0, "mu2": 0.0, "family": "pure_power", "p": 4,
            "a1": 1.0, "a2": 1.0, "b": 0.0,
            "alphas": [2.0], "branches": ["nodal:1"]}
    pfile.write_text(json.dumps(base))
    rc = main(["sweep", "--params", str(pfile), "--out", str(tmp_path / "sw"),
               "--grid", "2000", "--mesh", "500"])
    assert rc == 0
    payload = json.loads((tmp_path / "sw" / "sweep.json").read_text())
    row = payload["rows"][0]
    assert row["status"] == "ok"
    assert row["total_morse_index"] >= 2.0 + 3  # cited planar bound


def test_sweep_empty_alphas(tmp_path):
    pfile = tmp_path / "params.json"
    pfile.write_text(json.dumps({"N": 2, "family": "pure_power", "p": 4,
                                 "alphas": [], "branches": ["positive"]}))
    rc = main(["sweep", "--params", str(pfile), "--out", str(tmp_path / "sw")])
    assert rc == 2
    assert not (tmp_path / "sw" / "sweep.json").exists()


def test_sweep_records_failures(tmp_path):
    pfile = tmp_path / "params.json"
    pfile.write_text(json.dumps({"N": 3, "mu1": 0.0, "mu2": 0.0,
                                 "family": "pure_power", "p": 8,
                                 "a1": 1.0, "a2": 1.0, "b": 0.0,
                                 "alphas": [0.0], "branches": ["positive"]}))
    rc = main(["sweep", "--params", str(pfile), "--out", str(tmp_path / "sw"),
               "--grid", "1000", "--tol", "1e-8"])
    assert rc == 0  # partial failures do not abort the sweep
    payload = json.loads((tmp_path / "sw" / "sweep.json").read_text())
    assert payload["rows"][0]["status"] == "failed"
    assert "NoBracket" in payload["rows"][0]["reason"]


def test_liouville_windows(tmp_path):
    rc = main(["liouville", "--energy", "0.5", "--windows", "0,25",
               "--length", "20", "--out", str(tmp_path / "li"), "--mesh", "400"])
    assert rc == 0
    payload = json.loads((tmp_path / "li" / "liouville.json").read_text())
    assert payload["all_windows_unstable"] is True
    for w in payload["windows"]:
        assert w["q_min"] < 0
        assert w["sound"]
    assert (tmp_path / "li" / "witness_0.csv").exists()


def test_liouville_narrow_window_fails(tmp_path):
    rc = main(["liouville", "--energy", "0.5", "--windows", "50",
               "--length", "0.1", "--out", str(tmp_path / "li"), "--mesh", "200"])
    assert rc == 1


def test_liouville_zero_energy(tmp_path):
    rc = main(["liouville", "--energy", "0", "--out", str(tmp_path / "li")])
    assert rc == 0
    payload = json.loads((tmp_path / "li" / "liouville.json").read_text())
    assert payload["trivial"] is True


def test_usage_errors():
    assert main(["solve"]) == 2
    assert main(["unknown-command"]) == 2
