"""CSV + JSON persistence for profiles, transforms and reports.

Arrays go to columnar CSV; metadata goes to JSON with sorted keys so that
identical inputs produce byte-identical files apart from the ``created``
timestamp field.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import numpy as np

from .halfline import TransformedProfile
from .nonlinearity import NonlinearityF
from .radial_bvp import ProblemParams, RadialProfile


def _timestamp():
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


def params_to_dict(params: ProblemParams):
    return {
        "N": params.N,
        "alpha": params.alpha,
        "mu1": params.mu1,
        "mu2": params.mu2,
        "family": params.f.family,
        "p": params.f.p,
        "a1": params.f.a1,
        "a2": params.f.a2,
        "b": params.f.b,
    }


def params_from_dict(d):
    f = NonlinearityF(
        family=d["family"], p=float(d["p"]),
        a1=float(d.get("a1", 1.0)), a2=float(d.get("a2", 1.0)),
        b=float(d.get("b", 0.0)),
    )
    return ProblemParams(
        N=int(d["N"]), alpha=float(d["alpha"]),
        mu1=float(d.get("mu1", 0.0)), mu2=float(d.get("mu2", 0.0)), f=f,
    )


def _write_csv(path, header, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([repr(float(x)) for x in row])


def _read_csv(path, ncols):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim == 1:
        data = data[None, :]
    return [data[:, j] for j in range(ncols)]


def write_json(path, payload, with_timestamp=True):
    payload = dict(payload)
    if with_timestamp:
        payload["created"] = _timestamp()
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def save_profile(profile: RadialProfile, basepath, extra=None):
    """Write <base>.csv (r,u,v,du,dv) and <base>.json (params + certificates)."""
    base = Path(basepath)
    _write_csv(base.with_suffix(".csv"), ["r", "u", "v", "du", "dv"],
               [profile.grid, profile.u, profile.v, profile.du, profile.dv])
    from .radial_bvp import action_energy, relative_residual, residual

    header = {
        "kind": "radial_profile",
        "params": params_to_dict(profile.params),
        "amplitude": [profile.amplitude[0], profile.amplitude[1]],
        "grid_size": len(profile.grid) - 1,
        "residual": residual(profile),
        "relative_residual": relative_residual(profile),
        "energy": action_energy(profile),
    }
    if extra:
        header.update(extra)
    write_json(base.with_suffix(".json"), header)
    return base.with_suffix(".csv"), base.with_suffix(".json")


def load_profile(basepath):
    """Rebuild a RadialProfile from <base>.csv / <base>.json (no dense evaluator)."""
    base = Path(basepath)
    header = read_json(base.with_suffix(".json"))
    params = params_from_dict(header["params"])
    r, u, v, du, dv = _read_csv(base.with_suffix(".csv"), 5)
    amp = header.get("amplitude", [float(u[0]), float(v[0])])
    return RadialProfile(params, r, u, v, du, dv, (float(amp[0]), float(amp[1])))


def save_transformed(tp: TransformedProfile, basepath, extra=None):
    base = Path(basepath)
    _write_csv(base.with_suffix(".csv"), ["t", "u", "v", "du", "dv"],
               [tp.tgrid, tp.u, tp.v, tp.du, tp.dv])
    from .errors import HypothesisViolated
    from .halfline import pohozaev_check, transformed_residual

    try:
        pc = pohozaev_check(tp)
        pohozaev = {"lhs": pc.lhs, "rhs": pc.rhs, "slack": pc.slack,
                    "band": pc.tail_band}
    except HypothesisViolated as exc:
        pohozaev = {"skipped": str(exc)}
    header = {
        "kind": "transformed_profile",
        "params": params_to_dict(tp.params),
        "alpha": tp.alpha,
        "beta": tp.beta,
        "gamma": tp.gamma,
        "T": tp.T,
        "grid_size": len(tp.tgrid) - 1,
        "residual": transformed_residual(tp),
        "pohozaev": pohozaev,
    }
    if extra:
        header.update(extra)
    write_json(base.with_suffix(".json"), header)
    return base.with_suffix(".csv"), base.with_suffix(".json")


def load_transformed(basepath):
    base = Path(basepath)
    header = read_json(base.with_suffix(".json"))
    params = params_from_dict(header["params"])
    t, u, v, du, dv = _read_csv(base.with_suffix(".csv"), 5)
    return TransformedProfile(
        params=params, beta=float(header["beta"]), gamma=float(header["gamma"]),
        tgrid=t, u=u, v=v, du=du, dv=dv,
    )


def morse_report_to_dict(report):
    return {
        "per_ell": [
            {"ell": ell, "multiplicity": mult, "negatives": neg}
            for ell, mult, neg in report.per_ell
        ],
        "total": report.total_index,
        "certificate": report.truncation_certificate,
        "mesh": report.mesh,
        "mesh_stable": report.mesh_stable,
        "warnings": report.warnings,
    }
