"""Solver for the linearized surface balance

    d * u''(theta) + gamma(theta) * u(theta) = phi(theta)   on [0, eps],
    u(0) = u'(0) = 0,

by variation of parameters over an adaptively integrated fundamental basis,
cross-checked against a direct initial-value integration of the
inhomogeneous equation.  A matrix-exponential representation is available
as an extra oracle in the constant-coefficient regime, the only one where
the system matrix commutes with its own integral.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .core import lobatto_nodes
from .surface import LinearCoefficients, SurfaceShape

# Growth exponent above which the homogeneous solutions overflow double
# precision by astronomical margins; the solver refuses rather than return
# garbage.
STIFFNESS_LIMIT = 300.0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


class DegenerateOperatorError(ValueError):
    """d = 0: the balance is algebraic, not differential."""


class StiffnessError(RuntimeError):
    """The homogeneous solutions grow beyond double-precision range."""


class RouteDisagreementError(RuntimeError):
    """Variation-of-parameters and direct integration disagree."""


class ConstantCoefficientError(ValueError):
    """The exponential representation was requested for varying gamma."""


def stiffness_exponent(coeffs: LinearCoefficients) -> float:
    """sqrt(max|gamma|/d) * eps, the growth exponent across the strip."""
    return coeffs.stiffness()


def check_conditioning(coeffs: LinearCoefficients):
    if coeffs.d == 0.0:
        raise DegenerateOperatorError(
            "d = 0 (no surface tension): the linearized balance is the "
            "algebraic relation gamma*u = phi; use the pointwise path")
    kappa = stiffness_exponent(coeffs)
    if kappa > STIFFNESS_LIMIT:
        raise StiffnessError(
            f"sqrt(|gamma|/d)*eps = {kappa:.3e} exceeds {STIFFNESS_LIMIT:g}: "
            "homogeneous solutions overflow double precision at this "
            "parameter scale; rerun with a desk-scale preset")
    return kappa


@dataclass(frozen=True)
class LinearBasis:
    """Fundamental solutions of d*u'' + gamma*u = 0 with unit Wronskian.

    Phi1 carries initial data (1, 0), Phi2 carries (0, 1); the cofactor
    evaluators are W1 = -Phi2 and W2 = Phi1.  For this operator (no u'
    term) the Wronskian is constant and equal to 1.
    """

    eps: float
    _sol1: object
    _sol2: object

    def phi1(self, theta):
        return self._sol1(np.asarray(theta, float))[0][()]

    def phi2(self, theta):
        return self._sol2(np.asarray(theta, float))[0][()]

    def phi1_prime(self, theta):
        return self._sol1(np.asarray(theta, float))[1][()]

    def phi2_prime(self, theta):
        return self._sol2(np.asarray(theta, float))[1][()]

    def w1(self, theta):
        return -self.phi2(theta)

    def w2(self, theta):
        return self.phi1(theta)

    def wronskian(self, theta):
        th = np.asarray(theta, float)
        return (self._sol1(th)[0] * self._sol2(th)[1]
                - self._sol1(th)[1] * self._sol2(th)[0])[()]


def fundamental_solutions(coeffs: LinearCoefficients, tol_ode=1e-10) -> LinearBasis:
    """Integrate the homogeneous basis with dense output and verify the
    Wronskian stays at its initial value 1."""
    kappa = check_conditioning(coeffs)
    del kappa
    ratio = lambda th: coeffs.gamma(th) / coeffs.d

    def rhs(th, y):
        return (y[1], -ratio(th) * y[0])

    sols = []
    for y0 in ((1.0, 0.0), (0.0, 1.0)):
        sol = solve_ivp(rhs, (0.0, coeffs.eps), y0, dense_output=True,
                        rtol=tol_ode, atol=tol_ode)
        if not sol.success:
            raise RuntimeError(f"homogeneous integration failed: {sol.message}")
        sols.append(sol.sol)
    basis = LinearBasis(coeffs.eps, sols[0], sols[1])
    w = basis.wronskian(lobatto_nodes(0.0, coeffs.eps, 65))
    if np.max(np.abs(w - 1.0)) > 1e-8:
        raise RouteDisagreementError(
            f"Wronskian drifted from 1 by {np.max(np.abs(w - 1.0)):.3e}")
    return basis


def _cumulative_on(nodes, f):
    """Cumulative Gauss-Legendre integrals of vectorized ``f`` from nodes[0]
    to every node."""
    lo, hi = nodes[:-1], nodes[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(f(pts.ravel()), float).reshape(pts.shape)
    panels = (vals * _GL_W).sum(axis=1) * half
    return np.concatenate(([0.0], np.cumsum(panels)))


def particular_solution(basis: LinearBasis, phi: Callable, d: float,
                        degree=64) -> SurfaceShape:
    """Variation-of-parameters solution of d*u'' + gamma*u = phi vanishing
    to first order at 0:

        u(theta) = Phi2(theta) * I1(theta) - Phi1(theta) * I2(theta),
        Ik(theta) = int_0^theta phi(s) Phik(s) / (d * W(s)) ds.
    """
    if d == 0.0:
        raise DegenerateOperatorError("d = 0 has no variation-of-parameters form")
    # Interpolation points for the returned shape; integration runs
    # cumulatively through them from 0.
    cheb_pts = np.sort(0.5 * basis.eps * (1.0 + np.cos(
        np.pi * (2.0 * np.arange(degree + 1) + 1) / (2.0 * (degree + 1)))))
    nodes = np.concatenate(([0.0], cheb_pts))

    g_over_w = lambda s: np.asarray(phi(s), float) / (d * basis.wronskian(s))
    wmin = np.min(np.abs(basis.wronskian(nodes)))
    if wmin < 1e-300:
        raise RouteDisagreementError("Wronskian vanished: ill-conditioned basis")
    i1 = _cumulative_on(nodes, lambda s: g_over_w(s) * basis.phi1(s))[1:]
    i2 = _cumulative_on(nodes, lambda s: g_over_w(s) * basis.phi2(s))[1:]
    u = basis.phi2(cheb_pts) * i1 - basis.phi1(cheb_pts) * i2
    return SurfaceShape.fit_values(cheb_pts, u, basis.eps, degree=degree)


def _ivp_solution(coeffs: LinearCoefficients, phi: Callable, tol_ode):
    def rhs(th, y):
        return (y[1], (np.asarray(phi(th), float)
                       - coeffs.gamma(th) * y[0]) / coeffs.d)

    sol = solve_ivp(rhs, (0.0, coeffs.eps), (0.0, 0.0), dense_output=True,
                    rtol=tol_ode, atol=tol_ode)
    if not sol.success:
        raise RuntimeError(f"inhomogeneous integration failed: {sol.message}")
    return sol.sol


def solve_linear_response(coeffs: LinearCoefficients, phi: Callable,
                          tol_ode=1e-10, tol_quad=1e-10, degree=64,
                          basis: LinearBasis = None) -> SurfaceShape:
    """Unique solution of the linearized balance with zero initial data.

    Computed by variation of parameters and cross-checked against a direct
    initial-value integration; disagreement beyond the combined tolerance
    is surfaced as :class:`RouteDisagreementError`, never ignored.
    """
    check_conditioning(coeffs)
    if basis is None:
        basis = fundamental_solutions(coeffs, tol_ode)
    shape = particular_solution(basis, phi, coeffs.d, degree=degree)
    ivp = _ivp_solution(coeffs, phi, tol_ode)
    nodes = lobatto_nodes(0.0, coeffs.eps, 129)
    u_vp = shape(nodes)
    u_ivp = ivp(nodes)[0]
    tol = max(10.0 * tol_ode, 10.0 * tol_quad)
    gap = float(np.max(np.abs(u_vp - u_ivp)))
    if gap > tol * max(1.0, float(np.max(np.abs(u_vp)))):
        raise RouteDisagreementError(
            f"variation-of-parameters and direct integration differ by "
            f"{gap:.3e} (allowed {tol:.1e})")
    return shape


def constant_coefficient_exponential_check(coeffs: LinearCoefficients,
                                           phi: Callable, tol_ode=1e-10,
                                           tol_quad=1e-10) -> float:
    """Deviation of the matrix-exponential representation from the solver.

    Valid only for constant gamma, where the companion matrix commutes with
    its integral and Y(t) = int_0^t exp(M (t-s)) b(s) ds solves the
    first-order system exactly.
    """
    nodes = lobatto_nodes(0.0, coeffs.eps, 65)
    gvals = np.asarray(coeffs.gamma(nodes), float)
    spread = float(np.max(gvals) - np.min(gvals))
    scale = max(1.0, float(np.max(np.abs(gvals))))
    if spread > 1e-12 * scale:
        raise ConstantCoefficientError(
            "gamma varies across the strip: the companion matrix no longer "
            "commutes with its integral, so the exponential representation "
            "does not apply; use the variation-of-parameters route")
    u = solve_linear_response(coeffs, phi, tol_ode=tol_ode, tol_quad=tol_quad)
    m = np.array([[0.0, 1.0], [-float(gvals[0]) / coeffs.d, 0.0]])

    def y_exponential(t):
        def integrand(s):
            return expm(m * (t - s)) @ np.array([0.0, float(phi(s)) / coeffs.d])
        lo, hi = 0.0, t
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        pts = mid + half * _GL_X
        acc = np.zeros(2)
        for w, s in zip(_GL_W, pts):
            acc += w * integrand(s)
        return acc * half

    dev = 0.0
    for t in nodes[1:]:
        dev = max(dev, abs(y_exponential(t)[0] - float(u(t))))
    return dev
