"""Closed-form characteristic curves of the along-strip momentum balance
and their verification against the defining ODE system

    r'(s) = r(s) * sin(theta(s)),   theta'(s) = cos(theta(s)),

normalized so the curve crosses the equator at s = 0.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import DomainError


def s0_of_theta(theta):
    """Curve parameter at which the path launched on the equator reaches
    latitude ``theta``.

    Computed as arctanh(sin theta), which equals the half-log form
    0.5*ln((1+sin theta)/(1-sin theta)) but avoids cancellation near the
    poles.  Odd and strictly increasing on (-pi/2, pi/2).
    """
    th = np.asarray(theta, dtype=float)
    if np.any(np.abs(th) >= np.pi / 2):
        raise DomainError(f"theta must satisfy |theta| < pi/2, got {theta}")
    return np.arctanh(np.sin(th))[()]


def characteristic_point(r, theta, s):
    """Point (r_tilde, theta_tilde) on the characteristic through (r, theta).

    The closed form is r_tilde(s) = r*cos(theta)*cosh(s) and
    theta_tilde(s) = arcsin(tanh(s)); at s = s0_of_theta(theta) the path
    passes through (r, theta), and r_tilde*cos(theta_tilde) is constant
    along the whole path.
    """
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    if not abs(theta) < np.pi / 2:
        raise DomainError(f"theta must satisfy |theta| < pi/2, got {theta}")
    s = np.asarray(s, dtype=float)
    y = r * np.cos(theta)
    return (y * np.cosh(s))[()], np.arcsin(np.tanh(s))[()]


@dataclass(frozen=True)
class CharacteristicPath:
    """Characteristic through a launch point, with its hyperbolic constants
    c1 = c2 = r*cos(theta)/2 and the parameter value s0 of the launch point."""

    r_base: float
    theta_base: float
    c1: float
    c2: float
    s0: float

    @classmethod
    def through(cls, r, theta):
        c = r * np.cos(theta) / 2.0
        return cls(float(r), float(theta), float(c), float(c),
                   float(s0_of_theta(theta)))

    def point(self, s):
        return characteristic_point(self.r_base, self.theta_base, s)

    def invariant(self, s):
        """r_tilde(s) * cos(theta_tilde(s)), constant along the path."""
        rt, tt = self.point(s)
        return rt * np.cos(tt)


def verify_characteristic_odes(r, theta, s_span, tol=1e-10, n_samples=201):
    """Integrate the characteristic ODEs from the equator crossing of the
    path through (r, theta) and return the worst deviation from the closed
    form over ``s_span``, both components expressed on the radial scale.
    """
    s_lo, s_hi = float(s_span[0]), float(s_span[1])
    if s_lo == s_hi:
        return 0.0
    if not r > 0 or not abs(theta) < np.pi / 2:
        raise DomainError(f"invalid launch point (r={r}, theta={theta})")
    y0 = (r * np.cos(theta), 0.0)

    def rhs(s, state):
        rt, tt = state
        return (rt * np.sin(tt), np.cos(tt))

    sol = solve_ivp(rhs, (s_lo, s_hi), y0, dense_output=True,
                    rtol=tol, atol=(tol * max(r, 1.0), tol))
    if not sol.success:
        raise RuntimeError(f"characteristic integration failed: {sol.message}")
    ss = np.linspace(s_lo, s_hi, n_samples)
    rt_exact, tt_exact = characteristic_point(r, theta, ss)
    num = sol.sol(ss)
    dev_r = np.max(np.abs(num[0] - rt_exact))
    dev_theta = np.max(np.abs(num[1] - tt_exact))
    return float(max(dev_r, r * dev_theta))
