"""The autonomous limit system and its instability certificates.

Bounded trajectories of

    -u'' = s dF/du(u, v),   -v'' = s dF/dv(u, v)

on the line or half line conserve E = (u'^2 + v'^2)/2 + s F(u, v), and no
nontrivial bounded trajectory is stable outside a compact set: in every far
window (a, b) some compactly supported pair phi makes

    q(phi) = int (|phi'|^2 - s <D2F(u, v) phi, phi>) dt

strictly negative.  ``instability_witness`` certifies this by computing the
smallest Dirichlet eigenvalue of -d^2/dt^2 - s D2F(u, v) on the window
together with its minimizer, which doubles as an explicit witness.

The module also provides the two constructive ingredients used by the
blow-up machinery: logarithmic cutoffs psi_n = phi(ln t / n) u approximating
a finite-energy half-line function by compactly supported ones, and the
doubling-point selection on sampled positive grid functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson, solve_ivp

from .errors import NonTermination, OverflowBlowUp
from .nonlinearity import NonlinearityF

FULL_LINE = "full_line"
HALF_LINE = "half_line"
BLOWUP_GUARD = 1e12


@dataclass
class LimitTrajectory:
    """A sampled trajectory of the autonomous limit system."""

    f: NonlinearityF
    interval: str
    scale: float
    tgrid: np.ndarray
    u: np.ndarray
    v: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    dense: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def is_trivial(self):
        return float(np.max(np.abs(self.u)) + np.max(np.abs(self.v))
                     + np.max(np.abs(self.du)) + np.max(np.abs(self.dv))) == 0.0


def integrate_limit_system(f, scale, interval, init, T, steps=2000):
    """Trajectory of -u'' = s dF/du, -v'' = s dF/dv from the given initial data.

    Half-line trajectories must start from u = v = 0.  Integration uses a
    high-order adaptive pair at tight tolerances so that the conserved energy
    drifts by less than about 1e-10 over horizons of a few hundred.
    """
    if steps < 1000:
        raise ValueError("steps must be at least 1000")
    u0, v0, du0, dv0 = (float(x) for x in init)
    if interval == HALF_LINE and (u0 != 0.0 or v0 != 0.0):
        raise ValueError("half-line trajectories start from u(0) = v(0) = 0")
    if interval not in (FULL_LINE, HALF_LINE):
        raise ValueError(f"unknown interval {interval!r}")

    tgrid = np.linspace(0.0, T, steps + 1)
    if (u0, v0, du0, dv0) == (0.0, 0.0, 0.0, 0.0):
        z = np.zeros_like(tgrid)
        return LimitTrajectory(f, interval, scale, tgrid, z, z.copy(), z.copy(), z.copy())

    def rhs(t, y):
        fu, fv = f.grad(y[0], y[1])
        return (y[2], y[3], -scale * fu, -scale * fv)

    def blowup(t, y):
        return abs(y[0]) + abs(y[1]) - BLOWUP_GUARD

    blowup.terminal = True

    sol = solve_ivp(rhs, (0.0, T), [u0, v0, du0, dv0], method="DOP853",
                    rtol=1e-12, atol=1e-12, dense_output=True, events=blowup)
    if sol.status == 1:
        raise OverflowBlowUp(f"limit trajectory exceeded {BLOWUP_GUARD:.0e} at t = {sol.t[-1]:.3f}")
    vals = sol.sol(tgrid)
    return LimitTrajectory(f, interval, scale, tgrid,
                           vals[0], vals[1], vals[2], vals[3], dense=sol.sol)


def energy_of(traj):
    """E(t) = (u'^2 + v'^2)/2 + s F(u, v) sampled along the trajectory."""
    return 0.5 * (traj.du ** 2 + traj.dv ** 2) + traj.scale * traj.f.value(traj.u, traj.v)


def lower_mass_window(traj, eps, refine=2000):
    """Window centers and masses of |u|^p + |v|^p around its local maxima.

    Centers are local maxima of the density spaced at least 1 apart; each
    mass is the integral over (center - eps, center + eps).  For a nontrivial
    bounded trajectory the masses stay above a common positive bound.

    With a dense evaluator available, peak centers are polished by
    golden-section and each mass integrated on its own window subgrid, so
    masses of congruent windows agree to quadrature precision.
    """
    from scipy.signal import find_peaks

    from .nonlinearity import _golden_min

    t = traj.tgrid
    dt = t[1] - t[0]
    p = traj.f.p

    def density_arrays(u, v):
        return np.abs(u) ** p + np.abs(v) ** p

    g = density_arrays(traj.u, traj.v)
    if float(np.max(g)) == 0.0:
        return []
    peaks, _ = find_peaks(g, distance=max(int(round(1.0 / dt)), 1))
    out = []
    for idx in peaks:
        c = float(t[idx])
        if traj.dense is not None:
            def neg_density(x):
                vals = traj.dense(x)
                return -(abs(float(vals[0])) ** p + abs(float(vals[1])) ** p)

            c, _ = _golden_min(neg_density, c - dt, c + dt, tol=1e-13)
        if c - eps < t[0] or c + eps > t[-1]:
            continue
        if traj.dense is not None:
            ts = np.linspace(c - eps, c + eps, refine + 1)
            vals = traj.dense(ts)
            mass = float(simpson(density_arrays(vals[0], vals[1]), x=ts))
        else:
            m = (t >= c - eps) & (t <= c + eps)
            mass = float(simpson(g[m], x=t[m]))
        out.append((c, mass))
    return out


def _window_blocks(traj, a, b, mesh):
    """Dirichlet FD blocks of -d^2/dt^2 - s D2F(u, v) on (a, b)."""
    h = (b - a) / mesh
    ts = a + h * np.arange(1, mesh)  # interior nodes
    if traj.dense is not None:
        vals = traj.dense(ts)
        u, v = vals[0], vals[1]
    else:
        u = np.interp(ts, traj.tgrid, traj.u)
        v = np.interp(ts, traj.tgrid, traj.v)
    fuu, fuv, fvv = traj.f.hess(u, v)
    s = traj.scale
    d11 = 2.0 / h - h * s * fuu
    d22 = 2.0 / h - h * s * fvv
    d12 = -h * s * fuv
    off = np.full(mesh - 2, -1.0 / h)
    bw = np.full(mesh - 1, h)
    return d11, d12, d22, off, bw, ts, h


def instability_witness(traj, window, mesh=800):
    """Smallest Dirichlet eigenvalue of the second variation on a window.

    Returns (q_min, (ts, phi1, phi2)) where q_min is the minimum of q over
    test pairs supported in (a, b) scaled to unit mass and phi is the
    minimizer (including the boundary zeros).  q_min < 0 certifies an
    instability witness; re-verify by quadrature of q on phi.
    """
    a, b = float(window[0]), float(window[1])
    if not (traj.tgrid[0] <= a < b <= traj.tgrid[-1]):
        raise ValueError("window must lie inside the trajectory domain")
    d11, d12, d22, off, bw, ts, h = _window_blocks(traj, a, b, mesh)

    from .halfline import _count_below

    blocks = (d11, d12, d22, off, bw)
    fuu_max = float(np.max(np.abs(d11))) / h + 2.0
    lo = -fuu_max
    while _count_below(*blocks, lo) > 0:
        lo = 2.0 * lo - 1.0
    hi = 1.0
    while _count_below(*blocks, hi) < 1:
        hi = 2.0 * hi + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _count_below(*blocks, mid) >= 1:
            hi = mid
        else:
            lo = mid
        if (hi - lo) <= 1e-13 * (1.0 + abs(hi)):
            break
    q_min = 0.5 * (lo + hi)

    from scipy.linalg import solve_banded

    n = len(d11)
    sigma = q_min - 1e-6 * (1.0 + abs(q_min))
    ab = np.zeros((5, 2 * n))
    diag = np.empty(2 * n)
    diag[0::2] = d11 - sigma * bw
    diag[1::2] = d22 - sigma * bw
    ab[2] = diag
    ab[1, 1::2] = d12
    ab[3, 0::2] = d12
    ab[0, 2::2] = off
    ab[0, 3::2] = off
    ab[4, 0:-2:2] = off
    ab[4, 1:-2:2] = off
    Bv = np.empty(2 * n)
    Bv[0::2] = bw
    Bv[1::2] = bw
    rng = np.random.default_rng(4242)
    x = rng.standard_normal(2 * n)
    for _ in range(6):
        x = solve_banded((2, 2), ab, Bv * x)
        x = x / math.sqrt(float(np.dot(Bv * x, x)))
    tfull = np.concatenate([[a], ts, [b]])
    phi1 = np.concatenate([[0.0], x[0::2], [0.0]])
    phi2 = np.concatenate([[0.0], x[1::2], [0.0]])
    return q_min, (tfull, phi1, phi2)


def witness_quadrature(traj, pair):
    """Direct evaluation of q on a sampled pair, for soundness rechecks.

    Uses the same lowest-order forms the window discretization encodes
    (forward-difference gradient energy, node-lumped potential), so a
    converged eigenpair reproduces q_min times its mass exactly.
    """
    ts, phi1, phi2 = pair
    h = ts[1] - ts[0]
    grad = float(np.sum(np.diff(phi1) ** 2 + np.diff(phi2) ** 2) / h)
    if traj.dense is not None:
        vals = traj.dense(ts)
        u, v = vals[0], vals[1]
    else:
        u = np.interp(ts, traj.tgrid, traj.u)
        v = np.interp(ts, traj.tgrid, traj.v)
    fuu, fuv, fvv = traj.f.hess(u, v)
    pot = float(np.sum(h * traj.scale * (
        fuu * phi1 ** 2 + 2.0 * fuv * phi1 * phi2 + fvv * phi2 ** 2)))
    mass = float(np.sum(h * (phi1 ** 2 + phi2 ** 2)))
    return grad - pot, mass


def mother_plateau(x):
    """C-infinity plateau: 1 on [-1, 1], 0 outside [-2, 2], monotone between."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    out[x <= 1.0] = 1.0
    band = (x > 1.0) & (x < 2.0)
    xb = x[band]

    def S(y):
        with np.errstate(over="ignore"):
            return np.where(y > 0, np.exp(-1.0 / np.maximum(y, 1e-300)), 0.0)

    num = S(2.0 - xb)
    out[band] = num / (num + S(xb - 1.0))
    return out


def mother_plateau_dsup():
    """Numerical sup of |phi'| for the plateau mother function."""
    x = np.linspace(1.0, 2.0, 200_001)
    phi = mother_plateau(x)
    return float(np.max(np.abs(np.gradient(phi, x))))


def cutoff_sequence(tgrid, u, n):
    """psi_n = phi(ln t / n) u: compactly supported truncation of u.

    Vanishes for t <= exp(-2n) and t >= exp(2n); equals u on
    [exp(-n), exp(n)].  As n grows the derivative energy of u - psi_n
    decays like 1/n for finite-energy u with u(0) = 0.
    """
    t = np.asarray(tgrid, dtype=float)
    u = np.asarray(u, dtype=float)
    phi_n = np.zeros_like(t)
    pos = t > 0
    phi_n[pos] = mother_plateau(np.log(t[pos]) / n)
    return phi_n * u


def doubling_point(points, M, i_star):
    """Index of a grid point where M is large and doubled-controlled nearby.

    Runs the constructive selection: starting from i_star, repeatedly jump to
    any point within distance M(s)/M(current) whose value exceeds twice the
    current one (taking the argmax among violators for determinism).  The
    returned index i satisfies, exactly on the grid,

        M(t_i) >= M(t_star)  and  M(t) <= 2 M(t_i)
        for all grid t with |t - t_i| <= M(t_star)/M(t_i),

    and lies within distance 2 of the start.
    """
    pts = np.asarray(points, dtype=float)
    M = np.asarray(M, dtype=float)
    if np.any(M <= 0):
        raise ValueError("M must be strictly positive on the grid")
    m_star = M[i_star]
    cur = int(i_star)
    max_steps = int(math.ceil(math.log2(float(np.max(M)) / m_star))) + 2 if np.max(M) > m_star else 2
    for _ in range(max_steps + 1):
        radius = m_star / M[cur]
        ball = np.abs(pts - pts[cur]) <= radius
        violators = ball & (M > 2.0 * M[cur])
        if not np.any(violators):
            return cur
        idx = np.nonzero(violators)[0]
        cur = int(idx[np.argmax(M[idx])])
    raise NonTermination(
        "doubling selection exceeded its a-priori step bound; "
        "check the grid metric"
    )
