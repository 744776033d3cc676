"""p-homogeneous couplings F(u, v) and their sharp homogeneity constants.

Two concrete families are supported:

* ``pure_power``:      F(u,v) = (a1 |u|^p + a2 |v|^p) / p,  any p > 2
* ``quartic_coupled``: F(u,v) = (a1 u^4 + a2 v^4) / 4 + b u^2 v^2 / 2,  p = 4

Both are positive off the origin, C^2, and homogeneous of degree p, so they
satisfy the Euler identities

    p F          = u dF/du + v dF/dv,
    <D2F (u,v), (u,v)> = (p-1) (u dF/du + v dF/dv),

which the test suite checks on random samples.  The scalar power equation is
embedded as a pure_power coupling evaluated on (u, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PURE_POWER = "pure_power"
QUARTIC_COUPLED = "quartic_coupled"


def _golden_min(fun, lo, hi, tol=1e-12):
    """Golden-section minimum of a unimodal-enough fun, seeded by coarse sampling."""
    xs = np.linspace(lo, hi, 2001)
    vals = np.array([fun(x) for x in xs])
    i = int(np.argmin(vals))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, len(xs) - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def _signed_pow(x, q):
    """|x|^(q-1) x, defined as 0 at x = 0 for q > 0."""
    return np.sign(x) * np.abs(x) ** q


@dataclass(frozen=True)
class NonlinearityF:
    """A p-homogeneous C^2 coupling with positive values off the origin.

    Immutable after construction; safe to share across workers.
    """

    family: str
    p: float
    a1: float = 1.0
    a2: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.family not in (PURE_POWER, QUARTIC_COUPLED):
            raise ValueError(f"unknown family {self.family!r}")
        if not self.p > 2:
            raise ValueError("homogeneity degree p must exceed 2")
        if self.a1 <= 0 or self.a2 <= 0:
            raise ValueError("coefficients a1, a2 must be positive")
        if self.b < 0:
            raise ValueError("coupling b must be nonnegative")
        if self.family == QUARTIC_COUPLED and self.p != 4:
            raise ValueError("quartic_coupled fixes p = 4")
        if self.family == PURE_POWER and self.b != 0:
            raise ValueError("pure_power has no coupling term")

    def value(self, u, v):
        """F(u, v), elementwise on array input."""
        if self.family == PURE_POWER:
            return (self.a1 * np.abs(u) ** self.p + self.a2 * np.abs(v) ** self.p) / self.p
        u2, v2 = np.square(u), np.square(v)
        return (self.a1 * u2 * u2 + self.a2 * v2 * v2) / 4.0 + 0.5 * self.b * u2 * v2

    def grad(self, u, v):
        """(dF/du, dF/dv); each component is (p-1)-homogeneous."""
        if self.family == PURE_POWER:
            q = self.p - 1
            return self.a1 * _signed_pow(u, q), self.a2 * _signed_pow(v, q)
        fu = self.a1 * u ** 3 + self.b * u * np.square(v)
        fv = self.a2 * v ** 3 + self.b * np.square(u) * v
        return fu, fv

    def hess(self, u, v):
        """(F_uu, F_uv, F_vv) of the symmetric Hessian, elementwise.

        For pure_power with p < 4 the diagonal entries |.|^(p-2) are continuous
        down to 0 (one-sided limit 0 taken at the origin when p < 3, allowed
        because only p > 2 combinations are ever evaluated).
        """
        if self.family == PURE_POWER:
            q = self.p - 2
            c = self.p - 1
            fuu = self.a1 * c * np.abs(u) ** q
            fvv = self.a2 * c * np.abs(v) ** q
            return fuu, np.zeros_like(fuu), fvv
        fuu = 3.0 * self.a1 * np.square(u) + self.b * np.square(v)
        fuv = 2.0 * self.b * u * v
        fvv = 3.0 * self.a2 * np.square(v) + self.b * np.square(u)
        return fuu, fuv, fvv

    def hess_matrix(self, u, v):
        """Hessian as a 2x2 array at a single point."""
        fuu, fuv, fvv = self.hess(u, v)
        return np.array([[fuu, fuv], [fuv, fvv]], dtype=float)

    def coercivity_constant(self):
        """min of F on the l^p sphere |u|^p + |v|^p = 1 (strictly positive).

        pure_power has the closed form min(a1, a2)/p; the coupled family is
        minimized by golden-section refinement over the angle parameterization
        u = cos(phi)^(2/p) style coordinates x = u^2, y = v^2 on x^2 + y^2 = 1.
        """
        if self.family == PURE_POWER:
            return min(self.a1, self.a2) / self.p

        def on_p_sphere(phi):
            # x = u^4, y = v^4 with x + y = 1 via x = cos^2 phi
            x = math.cos(phi) ** 2
            y = 1.0 - x
            u = x ** 0.25
            v = y ** 0.25
            return float(self.value(u, v))

        _, fmin = _golden_min(on_p_sphere, 0.0, math.pi / 2.0)
        return fmin

    def growth_constant(self):
        """Smallest C with F(u,v) <= C (u^2 + v^2)^(p/2); max of F on the unit circle."""
        if self.family == PURE_POWER:
            # |cos t|^p + |sin t|^p <= 1 for p > 2, with equality on the axes.
            return max(self.a1, self.a2) / self.p

        def neg_on_circle(theta):
            return -float(self.value(math.cos(theta), math.sin(theta)))

        _, fneg = _golden_min(neg_on_circle, 0.0, math.pi / 2.0)
        return -fneg


def pure_power(p, a1=1.0, a2=1.0):
    return NonlinearityF(PURE_POWER, float(p), float(a1), float(a2), 0.0)


def quartic_coupled(a1=1.0, a2=1.0, b=0.0):
    return NonlinearityF(QUARTIC_COUPLED, 4.0, float(a1), float(a2), float(b))
