"""Radial solutions of weighted superlinear problems on the unit ball.

Radial profiles of

    -u'' - (N-1) u'/r + mu1 u = r^alpha dF/du(u, v)
    -v'' - (N-1) v'/r + mu2 v = r^alpha dF/dv(u, v)

on [0, 1] with u(1) = v(1) = 0 and u'(0) = v'(0) = 0 are computed by
shooting on the center amplitude.  Integration starts from a second-order
Taylor expansion at eps = 1e-6 (the (N-1)/r term is removably singular for
regular radial data) and uses an adaptive Dormand-Prince 5(4) pair, after
which the solution is resampled onto a uniform certification grid.

Positive solutions come from bisection on the first boundary zero of the
initial value problem; k-node solutions use the interior zero count of the
IVP solution as the monotone discriminator.  Every returned profile should
be certified through ``residual`` before spectral post-processing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson, solve_ivp

from .errors import DegenerateInput, NoBracket, NoConverge, OverflowBlowUp
from .nonlinearity import NonlinearityF

EPS_ORIGIN = 1e-6
BLOWUP_GUARD = 1e12
AMPLITUDE_CAP = 1e8


def sphere_area(N):
    """Surface area of the unit sphere in dimension N."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


@dataclass(frozen=True)
class ProblemParams:
    """Data of one radial boundary value problem on the unit ball."""

    N: int
    alpha: float
    mu1: float
    mu2: float
    f: NonlinearityF

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("dimension N must be at least 2")
        if self.alpha < 0:
            raise ValueError("numerical support is restricted to alpha >= 0")
        if self.mu1 < 0 or self.mu2 < 0:
            raise ValueError("mu1, mu2 must be nonnegative")

    @property
    def critical_exponent(self):
        """2N/(N-2) for N >= 3, infinity in the plane."""
        return math.inf if self.N == 2 else 2.0 * self.N / (self.N - 2.0)

    def check_subcritical(self):
        if not self.f.p < self.critical_exponent:
            raise ValueError(
                f"p = {self.f.p} is not subcritical for N = {self.N} "
                f"(2* = {self.critical_exponent})"
            )


@dataclass
class RadialProfile:
    """A sampled radial pair (u, v) with derivatives on a uniform grid over [0, 1].

    Treated as immutable after construction.  ``dense`` is an optional
    evaluator r -> (u, v, du, dv) kept when the profile was produced by
    integration in this process; it is not serialized.
    """

    params: ProblemParams
    grid: np.ndarray
    u: np.ndarray
    v: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    amplitude: tuple
    dense: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def is_trivial(self):
        return max(abs(self.amplitude[0]), abs(self.amplitude[1])) == 0.0

    def max_abs(self):
        return float(max(np.max(np.abs(self.u)), np.max(np.abs(self.v))))

    def scaled(self, t):
        """Profile multiplied by a scalar (loses the dense evaluator)."""
        return RadialProfile(
            self.params, self.grid, t * self.u, t * self.v,
            t * self.du, t * self.dv,
            (t * self.amplitude[0], t * self.amplitude[1]),
        )


def _taylor_start(params, d, r):
    """Second-order small-r expansion of the regular solution with center value d.

    u ~ d1 + mu1 d1 r^2/(2N) - dF/du(d) r^(2+alpha)/((2+alpha)(alpha+N)); for
    alpha = 0 the forcing term merges into the classical r^2/(2N) coefficient.
    """
    d1, d2 = d
    f = params.f
    a, N = params.alpha, params.N
    fu0, fv0 = f.grad(d1, d2)
    cu = params.mu1 * d1 / (2.0 * N)
    cv = params.mu2 * d2 / (2.0 * N)
    rf = r ** (2.0 + a) / ((2.0 + a) * (a + N))
    drf = r ** (1.0 + a) / (a + N)
    return np.array([
        d1 + cu * r * r - fu0 * rf,
        d2 + cv * r * r - fv0 * rf,
        2.0 * cu * r - fu0 * drf,
        2.0 * cv * r - fv0 * drf,
    ])


def _ivp_rhs(params):
    f = params.f
    N, a = params.N, params.alpha
    mu1, mu2 = params.mu1, params.mu2

    def rhs(r, y):
        u, v, du, dv = y
        fu, fv = f.grad(u, v)
        w = r ** a
        return (
            du,
            dv,
            -(N - 1.0) * du / r + mu1 * u - w * fu,
            -(N - 1.0) * dv / r + mu2 * v - w * fv,
        )

    return rhs


def _blowup_event():
    def event(r, y):
        return abs(y[0]) + abs(y[1]) - BLOWUP_GUARD

    event.terminal = True
    event.direction = 1
    return event


def _integrate_dense(params, d, rtol=1e-10, atol=1e-10, eps=EPS_ORIGIN):
    """Adaptive integration of the IVP; returns a dense evaluator on [0, 1].

    Raises OverflowBlowUp when the guard triggers before the boundary.
    """
    d = (float(d[0]), float(d[1]))
    if d == (0.0, 0.0):
        def zero(r):
            r = np.asarray(r, dtype=float)
            z = np.zeros_like(r)
            return np.array([z, z, z, z])
        return zero

    # adapt the origin cutoff so the series start stays a genuine correction:
    # large amplitudes develop an origin layer of scale |d|^(-(p-2)/2) that
    # must lie above eps for the regular solution to be the one integrated
    y0 = _taylor_start(params, d, eps)
    scale = abs(d[0]) + abs(d[1]) + 1.0
    for _ in range(8):
        drift = abs(y0[0] - d[0]) + abs(y0[1] - d[1])
        if drift <= 1e-8 * scale:
            break
        eps *= math.sqrt(1e-8 * scale / drift) * 0.9
        y0 = _taylor_start(params, d, eps)
    else:
        raise OverflowBlowUp(
            f"could not find a valid series start for amplitude {d}"
        )
    sol = solve_ivp(
        _ivp_rhs(params), (eps, 1.0), y0, method="RK45",
        rtol=rtol, atol=atol, dense_output=True, events=_blowup_event(),
    )
    if sol.status == 1:
        raise OverflowBlowUp(
            f"|u|+|v| exceeded {BLOWUP_GUARD:.0e} at r = {sol.t[-1]:.6f} "
            f"for amplitude {d}"
        )
    if sol.status != 0:
        raise NoConverge(f"IVP integration failed: {sol.message}")

    def evaluate(r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.empty((4, r.size))
        small = r < eps
        if np.any(small):
            for j in np.nonzero(small)[0]:
                out[:, j] = _taylor_start(params, d, r[j])
        if np.any(~small):
            out[:, ~small] = sol.sol(r[~small])
        return out[:, 0] if scalar else out

    return evaluate


def integrate_radial_ivp(params, d, grid_size=4000, rtol=1e-10, atol=1e-10):
    """Forward integration from the center with u(0) = d1, v(0) = d2, zero slope.

    No boundary condition is imposed at r = 1; the result is a shooting
    candidate sampled on the uniform certification grid.
    """
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    dense = _integrate_dense(params, d, rtol=rtol, atol=atol)
    grid = np.linspace(0.0, 1.0, grid_size + 1)
    vals = dense(grid)
    vals[:, 0] = [d[0], d[1], 0.0, 0.0]
    return RadialProfile(
        params, grid, vals[0], vals[1], vals[2], vals[3],
        (float(d[0]), float(d[1])), dense=dense,
    )


def _shot(params, d_pair, rtol=1e-12, atol=1e-12, n_probe=2000):
    """One shot: returns (boundary value u(1), interior zero count of u).

    Zeros are counted strictly inside (0, 1 - band); blow-up before the
    boundary counts as infinitely many crossings.
    """
    try:
        dense = _integrate_dense(params, d_pair, rtol=rtol, atol=atol)
    except OverflowBlowUp:
        return -math.inf, 10 ** 6
    rs = np.linspace(EPS_ORIGIN, 1.0, n_probe)
    u = dense(rs)[0]
    interior = u[rs < 1.0 - 1.5 / n_probe]
    sign = np.sign(interior)
    sign[sign == 0] = 1.0
    zeros = int(np.count_nonzero(np.diff(sign)))
    return float(u[-1]), zeros


def _bisect_amplitude(params, want_zeros, tol, diagonal=False):
    """Amplitude bisection on the monotone zero-count discriminator.

    Below the k-node root the shot has exactly k interior zeros and u(1)
    carries the sign (-1)^k; above it, either the (k+1)-th zero already shows
    up in the interior count or it still hides next to r = 1, in which case
    the flipped boundary sign exposes it.
    """
    k = want_zeros
    parity = 1.0 if k % 2 == 0 else -1.0

    def shot(d):
        return _shot(params, (d, d) if diagonal else (d, 0.0))

    def crossed(bv, z):
        if z > k:
            return True
        return z == k and parity * bv < 0.0

    d_lo = max(tol, 1e-6)
    bv_lo, z_lo = shot(d_lo)
    shrink = 0
    while crossed(bv_lo, z_lo) and shrink < 40:
        d_lo /= 4.0
        bv_lo, z_lo = shot(d_lo)
        shrink += 1
    if crossed(bv_lo, z_lo):
        raise NoBracket("discriminator already crossed at the smallest amplitude")

    d_hi = max(1.0, 2 * d_lo)
    bv_hi, z_hi = shot(d_hi)
    genuine_crossing = crossed(bv_hi, z_hi) and math.isfinite(bv_hi)
    while not crossed(bv_hi, z_hi):
        d_hi *= 2.0
        if d_hi > AMPLITUDE_CAP:
            raise NoBracket(
                f"no sign change of the shooting discriminator for "
                f"amplitudes up to {AMPLITUDE_CAP:.0e}"
            )
        bv_hi, z_hi = shot(d_hi)
        genuine_crossing = crossed(bv_hi, z_hi) and math.isfinite(bv_hi)

    best = None
    for _ in range(300):
        mid = 0.5 * (d_lo + d_hi)
        bv, z = shot(mid)
        if crossed(bv, z):
            d_hi = mid
            if math.isfinite(bv):
                genuine_crossing = True
        else:
            d_lo = mid
        if z == k:
            # both sides carry k interior zeros close to the root
            if best is None or abs(bv) < best[1]:
                best = (mid, abs(bv))
        if (d_hi - d_lo) <= tol * (1.0 + mid) and best is not None and best[1] <= tol:
            break
        if (d_hi - d_lo) <= 4e-16 * mid:
            break
    if best is None or (not genuine_crossing and best[1] > tol):
        # the only "crossings" seen were integration breakdowns, not boundary
        # zeros: there is no solution branch below the validity limit
        raise NoBracket(
            "no boundary crossing below the series-start validity limit "
            "(parameters outside the solvable regime)"
        )
    amplitude, boundary = best
    if boundary > tol:
        raise NoConverge(
            f"boundary value {boundary:.3e} above tolerance {tol:.1e} "
            f"after exhausting the bisection bracket"
        )
    return amplitude


def shoot_positive(params, tol=1e-10, grid_size=4000):
    """Positive radial solution with u > 0 on [0,1) and u(1) = 0 within tol.

    Scalar problems (second component identically zero) bisect on the first
    boundary zero; symmetric systems (a1 = a2, mu1 = mu2) use the diagonal
    ansatz u = v, which reduces to a scalar shoot.
    """
    symmetric = params.f.a1 == params.f.a2 and params.mu1 == params.mu2
    scalar = True
    if params.f.family == "quartic_coupled" and params.f.b > 0:
        # coupled system: only the symmetric diagonal ansatz is supported here
        if not symmetric:
            raise ValueError(
                "shoot_positive handles scalar problems or symmetric systems; "
                "use shoot_system_newton for general systems"
            )
        scalar = False

    if scalar:
        amplitude = _bisect_amplitude(params, want_zeros=0, tol=tol)
        d = (amplitude, 0.0)
    else:
        amplitude = _bisect_amplitude(params, want_zeros=0, tol=tol, diagonal=True)
        d = (amplitude, amplitude)
    return integrate_radial_ivp(params, d, grid_size, rtol=1e-12, atol=1e-12)


def shoot_nodal(params, nodes, tol=1e-10, grid_size=4000):
    """Scalar radial solution with exactly ``nodes`` interior zeros.

    Uses the interior zero count of the IVP solution, which is non-decreasing
    in the amplitude, as the bisection discriminator.  nodes = 0 delegates to
    the positive shoot.
    """
    if nodes < 0:
        raise ValueError("nodes must be nonnegative")
    if nodes == 0:
        return shoot_positive(params, tol=tol, grid_size=grid_size)
    amplitude = _bisect_amplitude(params, want_zeros=nodes, tol=tol)
    profile = integrate_radial_ivp(params, (amplitude, 0.0), grid_size,
                                   rtol=1e-12, atol=1e-12)
    if count_interior_zeros(profile, refine=4) != nodes:
        raise NoConverge("converged amplitude does not reproduce the requested node count")
    return profile


def shoot_system_newton(params, d0, tol=1e-10, grid_size=4000, max_iter=60):
    """Best-effort two-dimensional Newton on d -> (u(1; d), v(1; d)).

    Finite-difference Jacobian with step 1e-6 (1 + |d|), initialized from the
    caller's guess (typically the symmetric ansatz).  Raises NoConverge when
    the boundary values do not contract.
    """
    d = np.array(d0, dtype=float)

    def boundary(dd):
        dense = _integrate_dense(params, (dd[0], dd[1]), rtol=1e-12, atol=1e-12)
        vals = dense(1.0)
        return np.array([vals[0], vals[1]])

    for _ in range(max_iter):
        g = boundary(d)
        if np.max(np.abs(g)) <= tol:
            return integrate_radial_ivp(params, (d[0], d[1]), grid_size)
        J = np.empty((2, 2))
        for j in range(2):
            h = 1e-6 * (1.0 + abs(d[j]))
            dp = d.copy()
            dp[j] += h
            J[:, j] = (boundary(dp) - g) / h
        try:
            step = np.linalg.solve(J, g)
        except np.linalg.LinAlgError as exc:
            raise NoConverge(f"singular shooting Jacobian: {exc}") from exc
        # damped update to keep the iteration inside the integrable range
        lam = 1.0
        for _ in range(8):
            trial = d - lam * step
            try:
                if np.max(np.abs(boundary(trial))) < np.max(np.abs(g)):
                    d = trial
                    break
            except OverflowBlowUp:
                pass
            lam *= 0.5
        else:
            raise NoConverge("Newton step did not reduce the boundary defect")
    raise NoConverge(f"Newton did not reach tolerance {tol} in {max_iter} iterations")


def count_interior_zeros(profile, refine=1):
    """Sign changes of u strictly inside (0, 1), on an optionally refined grid."""
    if profile.dense is not None and refine > 1:
        rs = np.linspace(EPS_ORIGIN, 1.0, refine * (len(profile.grid) - 1) + 1)
        u = profile.dense(rs)[0]
    else:
        rs = profile.grid[1:]
        u = profile.u[1:]
    h = rs[1] - rs[0]
    interior = u[rs < 1.0 - 1.5 * h]
    sign = np.sign(interior)
    sign[sign == 0] = 1.0
    return int(np.count_nonzero(np.diff(sign)))


def residual(profile):
    """Max absolute ODE defect over interior grid points, both components.

    Second derivatives are recovered by centered differences on the stored
    grid, so the defect carries an O(h^2) floor proportional to the fourth
    derivative of the solution.
    """
    p = profile.params
    r = profile.grid
    h = r[1] - r[0]
    out = 0.0
    fu, fv = p.f.grad(profile.u, profile.v)
    w = r ** p.alpha
    for y, dy, mu, g in (
        (profile.u, profile.du, p.mu1, fu),
        (profile.v, profile.dv, p.mu2, fv),
    ):
        d2 = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / (h * h)
        ri = r[1:-1]
        defect = -d2 - (p.N - 1.0) * dy[1:-1] / ri + mu * y[1:-1] - w[1:-1] * g[1:-1]
        out = max(out, float(np.max(np.abs(defect))))
    return out


def relative_residual(profile):
    """Defect scaled by the size of the equation's terms (certification metric)."""
    p = profile.params
    fu, fv = p.f.grad(profile.u, profile.v)
    w = profile.grid ** p.alpha
    scale = 1.0 + max(
        float(np.max(np.abs(w * fu))), float(np.max(np.abs(w * fv))),
        p.mu1 * float(np.max(np.abs(profile.u))),
        p.mu2 * float(np.max(np.abs(profile.v))),
    )
    return residual(profile) / scale


def is_certified(profile, rel_tol=1e-5):
    return profile.is_trivial or relative_residual(profile) <= rel_tol


def require_certified(profile, rel_tol=1e-5):
    if not is_certified(profile, rel_tol):
        raise DegenerateInput(
            f"profile failed certification: relative residual "
            f"{relative_residual(profile):.3e} > {rel_tol:.1e}"
        )


def quadratic_part(profile):
    """Q = int (u'^2 + mu1 u^2 + v'^2 + mu2 v^2) over the ball (radial measure)."""
    p = profile.params
    r = profile.grid
    weight = sphere_area(p.N) * r ** (p.N - 1)
    integrand = (
        profile.du ** 2 + p.mu1 * profile.u ** 2
        + profile.dv ** 2 + p.mu2 * profile.v ** 2
    ) * weight
    return float(simpson(integrand, x=r))


def nonlinear_mass(profile):
    """P = int r^alpha p F(u, v) over the ball (radial measure)."""
    p = profile.params
    r = profile.grid
    weight = sphere_area(p.N) * r ** (p.N - 1)
    integrand = r ** p.alpha * p.f.p * p.f.value(profile.u, profile.v) * weight
    return float(simpson(integrand, x=r))


def action_energy(profile):
    """Value of the action functional I(u, v) = Q/2 - int r^alpha F(u, v).

    The nonlinear term enters with the weight that makes nontrivial solutions
    critical points (for the scalar power family this is the usual 1/p
    normalization carried inside F).
    """
    return 0.5 * quadratic_part(profile) - nonlinear_mass(profile) / profile.params.f.p


def nehari_project(profile):
    """Scale t > 0 placing the profile on the Nehari manifold, and the scaled profile.

    By p-homogeneity t = (Q/P)^(1/(p-2)) where Q is the quadratic part and P
    the nonlinear mass; an exact solution returns t = 1.
    """
    if profile.is_trivial:
        raise DegenerateInput("cannot project the zero profile")
    Q = quadratic_part(profile)
    P = nonlinear_mass(profile)
    if P <= 0.0:
        raise DegenerateInput(f"nonlinear mass P = {P:.3e} is not positive")
    t = (Q / P) ** (1.0 / (profile.params.f.p - 2.0))
    return profile.scaled(t), t


def nehari_defect(profile):
    """I'(w)(w) = Q - P, zero exactly on the Nehari manifold."""
    return quadratic_part(profile) - nonlinear_mass(profile)
