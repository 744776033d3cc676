"""Command-line driver: solve, sweep, verify, liouville.

Exit codes: 0 all checks passed, 1 a certified bound failed or no solution
was found, 2 usage or parameter-file errors.  All array output is CSV, all
metadata JSON; defaults (grids, tolerances, horizons) are recorded in every
JSON header for reproducibility.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io as hio
from .errors import HenonMorseError, HypothesisViolated, NoBracket, NoConverge
from .halfline import (
    pohozaev_check,
    pohozaev_identity_residual,
    pohozaev_lower_bound,
    smooth_bump,
    eval_Qk,
    transform_profile,
    transformed_residual,
)
from .liouville import (
    HALF_LINE,
    energy_of,
    instability_witness,
    integrate_limit_system,
    witness_quadrature,
)
from .nonlinearity import pure_power
from .radial_bvp import (
    ProblemParams,
    relative_residual,
    shoot_nodal,
    shoot_positive,
)
from .spectral import morse_index

RESIDUAL_GATE = 1e-4          # relative ODE defect for stored profiles
TRANSFORMED_GATE = 1e-3       # half-line defect for interpolated (stored) data
POHOZAEV_GATE = 1e-6          # relative slack tolerance
IDENTITY_GATE = 1e-5          # integral identity mismatch
QK_GATE = 1e-6                # random-probe negativity tolerance


def _parse_branch(spec):
    if spec == "positive":
        return 0
    if spec.startswith("nodal:"):
        nodes = int(spec.split(":", 1)[1])
        if nodes < 1:
            raise ValueError("nodal branch needs at least one node")
        return nodes
    raise ValueError(f"unknown branch {spec!r} (use 'positive' or 'nodal:k')")


def _solve_branch(params, nodes, tol, grid):
    if nodes == 0:
        return shoot_positive(params, tol=tol, grid_size=grid)
    return shoot_nodal(params, nodes, tol=tol, grid_size=grid)


def _load_params_file(path, need_alpha=True):
    try:
        raw = hio.read_json(path)
        probe = dict(raw)
        if not need_alpha:
            probe.setdefault("alpha", 0.0)
        params = hio.params_from_dict(probe)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise SystemExit(f"parameter file error: {exc}") from None
    return raw, params


def cmd_solve(args):
    raw, base_params = _load_params_file(args.params)
    branch = _parse_branch(raw.get("branch", "positive"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        profile = _solve_branch(base_params, branch, args.tol, args.grid)
    except (NoBracket, NoConverge) as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return 1
    extra = {"branch": raw.get("branch", "positive"),
             "tool": {"grid": args.grid, "tol": args.tol}}
    hio.save_profile(profile, out / "profile", extra=extra)
    print(f"wrote {out / 'profile'}.csv/.json  "
          f"(amplitude {profile.amplitude[0]:.6g}, "
          f"relative residual {relative_residual(profile):.3e})")
    return 0


def _sweep_row(job):
    """One fully certified sweep row; returns a plain dict (worker-safe)."""
    raw, alpha, branch_spec, grid, mesh, tol, horizon = job
    d = dict(raw)
    d["alpha"] = alpha
    params = hio.params_from_dict(d)
    row = {"alpha": alpha, "branch": branch_spec, "status": "ok", "reason": ""}
    try:
        nodes = _parse_branch(branch_spec)
        profile = _solve_branch(params, nodes, tol, grid)
        from .radial_bvp import action_energy

        row["amplitude"] = list(profile.amplitude)
        row["energy"] = action_energy(profile)
        row["relative_residual"] = relative_residual(profile)
        report = morse_index(profile, mesh=mesh, check_mesh_stability=True)
        row["morse"] = hio.morse_report_to_dict(report)
        row["total_morse_index"] = report.total_index
        row["mesh_stable"] = report.mesh_stable
        if not report.mesh_stable:
            row["status"] = "unstable"
            row["reason"] = "sector counts changed under mesh doubling"
        tp = transform_profile(profile, T=horizon)
        row["transformed_residual"] = transformed_residual(tp)
        try:
            pc = pohozaev_check(tp)
            row["pohozaev"] = {"lhs": pc.lhs, "rhs": pc.rhs,
                               "slack": pc.slack, "band": pc.tail_band}
        except HypothesisViolated as exc:
            row["pohozaev"] = {"skipped": str(exc)}
    except HenonMorseError as exc:
        row["status"] = "failed"
        row["reason"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(args):
    raw, _ = _load_params_file(args.params, need_alpha=False)
    alphas = raw.get("alphas", [])
    branches = raw.get("branches", ["positive"])
    if not alphas:
        print("sweep error: empty alpha list", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(raw, float(a), br, args.grid, args.mesh, args.tol, args.T)
            for br in branches for a in alphas]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    rows.sort(key=lambda r: (r["branch"], r["alpha"]))

    onset = None
    for row in rows:
        if row["status"] == "ok" and row.get("total_morse_index", 0) > 1:
            if onset is None or row["alpha"] < onset:
                onset = row["alpha"]
    payload = {
        "kind": "sweep",
        "base_params": {k: v for k, v in raw.items() if k not in ("alphas", "branches")},
        "alphas": alphas,
        "branches": branches,
        "rows": rows,
        "summary": {"smallest_alpha_with_index_above_1": onset},
        "tool": {"grid": args.grid, "mesh": args.mesh, "tol": args.tol, "T": args.T},
    }
    hio.write_json(out / "sweep.json", payload)
    with open(out / "sweep.csv", "w") as fh:
        fh.write("alpha,branch,status,amplitude_u,amplitude_v,energy,"
                 "total_morse_index,mesh_stable,transformed_residual,pohozaev_slack\n")
        for row in rows:
            amp = row.get("amplitude", [float("nan")] * 2)
            po = row.get("pohozaev", {})
            fh.write(",".join(str(x) for x in (
                row["alpha"], row["branch"], row["status"],
                amp[0], amp[1], row.get("energy", float("nan")),
                row.get("total_morse_index", ""),
                row.get("mesh_stable", ""),
                row.get("transformed_residual", float("nan")),
                po.get("slack", float("nan")) if isinstance(po, dict) else float("nan"),
            )) + "\n")
    n_failed = sum(1 for r in rows if r["status"] == "failed")
    print(f"wrote {out / 'sweep.json'} ({len(rows)} rows, {n_failed} failed, "
          f"symmetry-breaking onset alpha = {onset})")
    return 0


def cmd_verify(args):
    try:
        profile = hio.load_profile(args.profile)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"profile load error: {exc}", file=sys.stderr)
        return 2
    checks = {}
    report = {"kind": "verification", "profile": str(args.profile), "checks": checks}

    if profile.is_trivial:
        report["trivial"] = True
        if args.out:
            hio.write_json(args.out, report)
        print("trivial profile: vacuous pass")
        return 0
    report["trivial"] = False

    rel = relative_residual(profile)
    checks["radial_residual"] = {"value": rel, "limit": RESIDUAL_GATE,
                                 "pass": rel <= RESIDUAL_GATE}

    tp = transform_profile(profile, T=args.T)
    tres = transformed_residual(tp)
    checks["transformed_residual"] = {"value": tres, "limit": TRANSFORMED_GATE,
                                      "pass": tres <= TRANSFORMED_GATE}

    try:
        pc = pohozaev_check(tp)
        ok = pc.slack >= -(POHOZAEV_GATE * (1.0 + pc.lhs) + pc.tail_band)
        checks["pohozaev_slack"] = {"lhs": pc.lhs, "rhs": pc.rhs,
                                    "slack": pc.slack, "band": pc.tail_band,
                                    "pass": bool(ok)}
        ident = pohozaev_identity_residual(tp)
        checks["pohozaev_identity"] = {"value": ident, "limit": IDENTITY_GATE,
                                       "pass": ident <= IDENTITY_GATE}
        p = profile.params
        if tp.gamma <= p.N / (3.0 * p.f.p):
            C = pohozaev_lower_bound(p.f, p.N)
            ok = pc.lhs >= C * (1.0 - 1e-9) - pc.tail_band
            checks["pohozaev_lower_bound"] = {"lhs": pc.lhs, "constant": C,
                                              "pass": bool(ok)}
    except HypothesisViolated as exc:
        checks["pohozaev_slack"] = {"skipped": str(exc), "pass": True}

    # random-probe minimum of the stability form on the first stable sector
    try:
        rep = morse_index(profile, mesh=args.mesh)
        stable_ell = next((ell for ell, _, neg in rep.per_ell if neg == 0), None)
        if stable_ell is not None:
            from .spectral import lambda_ell

            lam = lambda_ell(stable_ell, profile.params.N)
            rng = np.random.default_rng(20260809)
            qmin = np.inf
            for _ in range(100):
                a = rng.uniform(0.0, 0.6 * tp.T)
                b = a + rng.uniform(0.5, 0.2 * tp.T)
                phi, dphi = smooth_bump(tp.tgrid, a, min(b, tp.T))
                c1, c2 = rng.uniform(-1.0, 1.0, 2)
                qmin = min(qmin, eval_Qk(tp, lam, (c1 * phi, c2 * phi),
                                         (c1 * dphi, c2 * dphi)))
            checks["qk_probe_min"] = {"ell": stable_ell, "value": float(qmin),
                                      "pass": bool(qmin >= -QK_GATE)}
        report["morse"] = hio.morse_report_to_dict(rep)
    except HenonMorseError as exc:
        checks["qk_probe_min"] = {"error": str(exc), "pass": False}

    ok = all(c.get("pass", False) for c in checks.values())
    report["pass"] = bool(ok)
    if args.out:
        hio.write_json(args.out, report)
    for name, c in checks.items():
        print(f"[{'PASS' if c.get('pass') else 'FAIL'}] {name}: "
              f"{json.dumps({k: v for k, v in c.items() if k != 'pass'}, default=float)}")
    return 0 if ok else 1


def cmd_liouville(args):
    if args.energy < 0:
        print("energy must be nonnegative", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.energy == 0.0:
        payload = {"kind": "liouville", "trivial": True, "windows": []}
        hio.write_json(out / "liouville.json", payload)
        print("trivial zero-energy trajectory: nothing to certify")
        return 0

    f = pure_power(args.p)
    du0 = (2.0 * args.energy) ** 0.5  # E(0) = du^2/2 at u(0) = 0
    starts = [float(s) for s in args.windows.split(",")]
    T = max(s + args.length for s in starts) + 5.0
    traj = integrate_limit_system(f, 1.0, HALF_LINE, (0.0, 0.0, du0, 0.0),
                                  T=T, steps=max(2000, int(20 * T)))
    E = energy_of(traj)
    drift = float(np.max(np.abs(E - E[0])))
    hio._write_csv(out / "trajectory.csv", ["t", "u", "v", "du", "dv"],
                   [traj.tgrid, traj.u, traj.v, traj.du, traj.dv])

    windows = []
    all_negative = True
    for s in starts:
        q_min, pair = instability_witness(traj, (s, s + args.length), mesh=args.mesh)
        q_direct, mass = witness_quadrature(traj, pair)
        sound = abs(q_direct - q_min * mass) <= 1e-8 * (1.0 + abs(q_min))
        windows.append({
            "window": [s, s + args.length],
            "q_min": q_min,
            "q_quadrature": q_direct,
            "sound": bool(sound),
            "witness_negative": bool(q_min < 0.0),
        })
        ts, p1, p2 = pair
        hio._write_csv(out / f"witness_{s:g}.csv", ["t", "phi1", "phi2"], [ts, p1, p2])
        if q_min >= 0.0 or not sound:
            all_negative = False
    payload = {
        "kind": "liouville",
        "trivial": False,
        "p": args.p,
        "energy": args.energy,
        "energy_drift": drift,
        "windows": windows,
        "all_windows_unstable": bool(all_negative),
    }
    hio.write_json(out / "liouville.json", payload)
    for w in windows:
        print(f"[{'PASS' if w['witness_negative'] and w['sound'] else 'FAIL'}] "
              f"window {w['window']}: q_min = {w['q_min']:.6f}")
    if not all_negative:
        print("some window admitted no certified instability witness", file=sys.stderr)
        return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="henon-morse",
        description="radial solves, Morse indices and half-line stability checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="compute one certified radial profile")
    ps.add_argument("--params", required=True, help="JSON parameter file")
    ps.add_argument("--out", required=True, help="output directory")
    ps.add_argument("--grid", type=int, default=4000)
    ps.add_argument("--tol", type=float, default=1e-10)
    ps.set_defaults(func=cmd_solve)

    pw = sub.add_parser("sweep", help="alpha sweep with certified Morse indices")
    pw.add_argument("--params", required=True,
                    help="JSON parameter file with 'alphas' and 'branches'")
    pw.add_argument("--out", required=True)
    pw.add_argument("--grid", type=int, default=4000)
    pw.add_argument("--mesh", type=int, default=1000)
    pw.add_argument("--tol", type=float, default=1e-10)
    pw.add_argument("--T", type=float, default=None,
                    help="transform horizon (default 30/beta)")
    pw.add_argument("--workers", type=int, default=1)
    pw.set_defaults(func=cmd_sweep)

    pv = sub.add_parser("verify", help="re-certify a stored profile")
    pv.add_argument("--profile", required=True,
                    help="base path of a stored profile (without extension)")
    pv.add_argument("--out", default=None, help="verification JSON path")
    pv.add_argument("--mesh", type=int, default=1000)
    pv.add_argument("--T", type=float, default=None)
    pv.set_defaults(func=cmd_verify)

    pl = sub.add_parser("liouville", help="window instability certificates")
    pl.add_argument("--p", type=float, default=4.0)
    pl.add_argument("--energy", type=float, required=True)
    pl.add_argument("--windows", default="0,25,50,100",
                    help="comma-separated window starts")
    pl.add_argument("--length", type=float, default=20.0)
    pl.add_argument("--mesh", type=int, default=800)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_liouville)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except SystemExit as exc:
        # parameter-file failures funnel here with a diagnostic message
        print(exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
