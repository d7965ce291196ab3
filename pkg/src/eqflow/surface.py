"""Free-surface geometry and the nondimensional surface-pressure balance.

A surface shape is the relative radial perturbation H(theta) of the
undisturbed surface r = R, represented in a Chebyshev basis on [0, eps]
with H(0) = H'(0) = 0.  The balance functional

    F(H, P)(theta) = G(H)(theta) - P(theta)

collects, per unit atmospheric pressure: the hydrostatic column up to the
perturbed surface, the momentum line integral up to y = (1+H)*R*cos(theta),
the angular integration constant, and the surface-tension curvature term.
Setting F = 0 ties the surface pressure trace P to the shape H.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.interpolate import CubicSpline

from .core import DomainError, integrate_tol, lobatto_nodes

TERMS = frozenset(("gravity", "flow", "curvature"))


def _offset_integral(f, width, tol):
    """Integral of ``f`` over [0, width] where ``width`` may be tiny or
    negative; degenerate widths short-circuit to the midpoint rule."""
    if width == 0.0:
        return 0.0
    if abs(width) < 1e-280:
        return float(f(0.5 * width)) * width
    return integrate_tol(f, 0.0, width, tol)


def _trim_tail(cheb: Chebyshev) -> Chebyshev:
    """Drop trailing Chebyshev coefficients at the round-off floor.

    Spectral second derivatives amplify a degree-k coefficient by O(k^4)
    over a narrow domain, so carrying a machine-noise tail through shape
    construction would pollute curvature evaluations.
    """
    scale = float(np.max(np.abs(cheb.coef))) if cheb.coef.size else 0.0
    if scale == 0.0:
        return Chebyshev([0.0], domain=cheb.domain)
    return cheb.trim(tol=5e-14 * scale)


class SurfaceShape:
    """Surface perturbation H on [0, eps] in a Chebyshev basis.

    Construction projects out the affine part so that H(0) = H'(0) = 0
    (pass ``project=False`` for hypothetical shapes used in pure-function
    tests).  Derivatives are exact spectral derivatives of the coefficient
    representation.
    """

    def __init__(self, cheb: Chebyshev, project=True):
        lo, hi = cheb.domain
        if lo != 0.0 or hi <= 0.0:
            raise ValueError("shape domain must be [0, eps]")
        self.eps = float(hi)
        if project:
            u0 = float(cheb(0.0))
            u1 = float(cheb.deriv(1)(0.0))
            affine = Chebyshev([u0 + u1 * self.eps / 2.0, u1 * self.eps / 2.0],
                               domain=cheb.domain)
            cheb = cheb - affine
            scale = 1.0 + float(np.max(np.abs(cheb.coef))) if cheb.coef.size else 1.0
            if abs(float(cheb(0.0))) > 1e-12 * scale:
                raise ValueError("projection failed to zero the surface at the equator")
        self._c = cheb
        self._c1 = cheb.deriv(1)
        self._c2 = cheb.deriv(2)
        sample = self(lobatto_nodes(0.0, self.eps, 65))
        if np.any(1.0 + sample <= 0.0):
            raise DomainError("shape dips below the planetary center: 1 + H <= 0")

    @classmethod
    def zero(cls, eps):
        return cls(Chebyshev([0.0], domain=[0.0, float(eps)]), project=False)

    @classmethod
    def from_callable(cls, fn, eps, degree=32, project=True):
        """Interpolate a vectorized callable at Chebyshev points."""
        cheb = Chebyshev.interpolate(fn, degree, domain=[0.0, float(eps)])
        return cls(_trim_tail(cheb), project=project)

    @classmethod
    def fit_values(cls, thetas, values, eps, degree=32, project=True):
        cheb = Chebyshev.fit(np.asarray(thetas, float), np.asarray(values, float),
                             deg=degree, domain=[0.0, float(eps)])
        return cls(_trim_tail(cheb), project=project)

    @property
    def coefficients(self):
        return self._c.coef.copy()

    @property
    def degree(self):
        return len(self._c.coef) - 1

    def __call__(self, theta):
        return self._c(np.asarray(theta, float))[()]

    def h_theta(self, theta):
        return self._c1(np.asarray(theta, float))[()]

    def h_thetatheta(self, theta):
        return self._c2(np.asarray(theta, float))[()]

    def dimensional(self, R):
        """Evaluator of the dimensional surface elevation h = R * H."""
        return lambda theta: R * self(theta)

    def mirrored(self):
        """Even extension onto [-eps, eps], for display only."""
        return lambda theta: self(np.abs(np.asarray(theta, float)))

    def sup_abs(self, n=513):
        return float(np.max(np.abs(self(lobatto_nodes(0.0, self.eps, n)))))

    def truncated(self, degree):
        return SurfaceShape(self._c.truncate(degree + 1))

    def __add__(self, other):
        return SurfaceShape(self._c + other._c, project=False)

    def __sub__(self, other):
        return SurfaceShape(self._c - other._c, project=False)

    def __mul__(self, scalar):
        return SurfaceShape(self._c * float(scalar), project=False)

    __rmul__ = __mul__


class PressureTrace:
    """Nondimensional surface pressure on [0, eps]; a thin vectorized wrapper
    around an evaluator."""

    def __init__(self, fn: Callable, eps):
        self._fn = fn
        self.eps = float(eps)
        probe = np.asarray(fn(lobatto_nodes(0.0, self.eps, 9)), float)
        if not np.all(np.isfinite(probe)):
            raise ValueError("pressure trace is not finite on [0, eps]")

    def __call__(self, theta):
        return np.asarray(self._fn(np.asarray(theta, float)), float)[()]

    @classmethod
    def from_function(cls, fn, eps, degree=None):
        """Wrap a (possibly expensive, scalar-only) function; with ``degree``
        the trace is frozen into a Chebyshev interpolant."""
        if degree is None:
            vec = lambda th: np.array([fn(t) for t in np.atleast_1d(th)])
            return cls(vec, eps)
        cheb = Chebyshev.interpolate(
            lambda th: np.array([fn(t) for t in np.atleast_1d(th)]),
            degree, domain=[0.0, float(eps)])
        return cls(_trim_tail(cheb), eps)

    @classmethod
    def from_samples(cls, thetas, values):
        thetas = np.asarray(thetas, float)
        values = np.asarray(values, float)
        spline = CubicSpline(thetas, values)
        return cls(spline, thetas[-1])

    def shifted(self, delta):
        return PressureTrace(lambda th: self(th) + delta, self.eps)


def curvature_divergence(shape: SurfaceShape, theta):
    """Nondimensional curvature combination of the outward normal's
    divergence at the perturbed surface:

        J = ((1+H)^2 + 2 H'^2 - H'' (1+H)^2) / ((1+H)^2 + H'^2)^(3/2).

    Equals 1 for the undisturbed surface.
    """
    H = shape(theta)
    H1 = shape.h_theta(theta)
    H2 = shape.h_thetatheta(theta)
    one = 1.0 + H
    return (one ** 2 + 2.0 * H1 ** 2 - H2 * one ** 2) / (one ** 2 + H1 ** 2) ** 1.5


def surface_normal(shape: SurfaceShape, theta, R=1.0):
    """Outward unit normal components (n_r, n_theta) at the dimensional
    surface r = (1 + H) * R."""
    r = (1.0 + shape(theta)) * R
    h1 = R * shape.h_theta(theta)
    norm = np.sqrt(r ** 2 + h1 ** 2)
    return r / norm, -h1 / norm


@dataclass(frozen=True)
class LinearCoefficients:
    """Coefficients of the linearized balance d * H'' + gamma * H."""

    gamma: Callable
    d: float
    eps: float

    def gamma_max(self, n=513):
        return float(np.max(np.abs(self.gamma(lobatto_nodes(0.0, self.eps, n)))))

    def stiffness(self):
        """sqrt(max|gamma| / d) * eps: growth exponent of the homogeneous
        solutions across the strip (infinite when d = 0)."""
        if self.d == 0.0:
            return math.inf
        return math.sqrt(self.gamma_max() / self.d) * self.eps


def frechet_apply(coeffs: LinearCoefficients, shape: SurfaceShape):
    """Trace of the linearized balance applied to a shape."""
    def trace(theta):
        return (coeffs.d * shape.h_thetatheta(theta)
                + coeffs.gamma(np.asarray(theta, float)) * shape(theta))
    return trace


class SurfaceFunctional:
    """The balance functional G and residual F(H, P) = G(H) - P for one
    flow field.

    ``terms`` restricts which contributions of G are active ("gravity",
    "flow", "curvature"); the restriction is a test hook used to isolate
    the curvature limit in finite-difference certifications.
    """

    def __init__(self, flow, terms=TERMS):
        self.flow = flow
        self.params = flow.params
        unknown = set(terms) - TERMS
        if unknown:
            raise ValueError(f"unknown functional terms {sorted(unknown)}")
        self.terms = frozenset(terms)
        p = self.params
        # Surface-tension coefficient of the nondimensional balance.  The
        # curvature term enters G as sigma/(R*P_atm) * J, so this is also the
        # second-order coefficient of the linearization.
        self.d = p.sigma / (p.R * p.P_atm)
        self._baseline = None

    # -- functional evaluation -------------------------------------------

    def _check_theta(self, theta):
        if not 0.0 <= theta <= self.params.eps * (1 + 1e-12):
            raise DomainError(f"theta={theta:g} outside [0, {self.params.eps:g}]")

    def g_value(self, shape: SurfaceShape, theta, terms=None):
        """G(H)(theta) by adaptive quadrature."""
        terms = self.terms if terms is None else frozenset(terms)
        self._check_theta(theta)
        p = self.params
        H = float(shape(theta))
        if 1.0 + H <= 0.0:
            raise DomainError(f"1 + H <= 0 at theta={theta:g}")
        upper = (1.0 + H) * p.R
        if upper > p.r_max * (1 + 1e-12):
            raise DomainError(f"surface radius {upper:g} above domain top {p.r_max:g}")
        total = (self.flow.A + float(self.flow._cvar(theta))) / p.P_atm
        if "gravity" in terms:
            grav = integrate_tol(lambda x: self.flow.density.rho(x, theta),
                                 p.a, upper, p.tol_quad)
            total -= p.g * grav / p.P_atm
        if "flow" in terms:
            c = math.cos(theta)
            mid = integrate_tol(
                lambda y: self.flow.profile(y) / y
                + self.flow.stratification_integral(y, theta),
                p.a * c, upper * c, p.tol_quad)
            total += mid / p.P_atm
        if "curvature" in terms:
            total -= self.d * float(curvature_divergence(shape, theta))
        return total

    def g_difference(self, shape: SurfaceShape, s, theta, terms=None):
        """G(s*H)(theta) - G(0)(theta) in difference form.

        The gravity and momentum contributions are integrated only over the
        interval swept by the perturbation, which avoids the catastrophic
        cancellation a literal subtraction of two O(1) values would suffer
        in finite-difference derivative checks.
        """
        terms = self.terms if terms is None else frozenset(terms)
        self._check_theta(theta)
        p = self.params
        H = float(shape(theta)) * s
        if 1.0 + H <= 0.0 or (1.0 + H) * p.R > p.r_max * (1 + 1e-12):
            raise DomainError(f"scaled shape leaves the domain at theta={theta:g}")
        # Integrate in offsets from the undisturbed surface: anchoring the
        # sliver at R would limit its width to R-scale ULPs, which a later
        # division by s amplifies into the leading error of derivative
        # quotients.
        total = 0.0
        if "gravity" in terms:
            width = H * p.R
            total -= p.g * _offset_integral(
                lambda u: self.flow.density.rho(p.R + u, theta),
                width, p.tol_quad) / p.P_atm
        if "flow" in terms:
            c = math.cos(theta)
            total += _offset_integral(
                lambda u: self.flow.profile(p.R * c + u) / (p.R * c + u)
                + self.flow.stratification_integral(p.R * c + u, theta),
                H * p.R * c, p.tol_quad) / p.P_atm
        if "curvature" in terms:
            scaled = shape * s
            total -= self.d * (float(curvature_divergence(scaled, theta)) - 1.0)
        return total

    def bernoulli_functional(self, shape: SurfaceShape, P: PressureTrace):
        """Residual trace F(H, P) = G(H) - P as a scalar-wise evaluator."""
        def trace(theta):
            th = np.atleast_1d(np.asarray(theta, float))
            g = np.array([self.g_value(shape, t) for t in th])
            return (g - P(th))[()] if th.size > 1 else float(g[0] - P(th)[()])
        return trace

    def residual_values(self, shape: SurfaceShape, P: PressureTrace, nodes):
        """F(H, P) sampled on given nodes (the solver's fast path)."""
        return np.array([self.g_value(shape, t) for t in nodes]) - P(nodes)

    # -- baseline and linearization ----------------------------------------

    def baseline_pressure(self, degree=64) -> PressureTrace:
        """The surface pressure that keeps the undisturbed shape in balance,
        frozen into a Chebyshev trace."""
        if self._baseline is None or self._baseline.eps != self.params.eps:
            zero = SurfaceShape.zero(self.params.eps)
            self._baseline = PressureTrace.from_function(
                lambda th: self.g_value(zero, th), self.params.eps, degree=degree)
        return self._baseline

    def linear_coefficients(self, degree=64, terms=None) -> LinearCoefficients:
        """Coefficients of the linearization of G at the undisturbed shape.

        gamma(theta) collects the gravity and rotation responses of the
        column integrals at the surface plus the zeroth-order curvature
        response d; the second-derivative coefficient is d itself.
        """
        terms = self.terms if terms is None else frozenset(terms)
        p = self.params

        def raw(theta):
            val = 0.0
            rho_R = float(self.flow.density.rho(p.R, theta))
            if "gravity" in terms:
                val -= p.g * p.R * rho_R / p.P_atm
            if "flow" in terms:
                w = self.flow.azimuthal_velocity(p.R, theta)
                val += (rho_R * p.Omega * p.R * math.cos(theta)
                        * (2.0 * w + p.Omega * p.R * math.cos(theta))) / p.P_atm
            if "curvature" in terms:
                val += self.d
            return val

        proxy = Chebyshev.interpolate(
            lambda th: np.array([raw(t) for t in np.atleast_1d(th)]),
            degree, domain=[0.0, p.eps])
        d_eff = self.d if "curvature" in terms else 0.0
        return LinearCoefficients(gamma=proxy, d=d_eff, eps=p.eps)

    def frechet_fd_check(self, shape: SurfaceShape, s_values, terms=None,
                         n_nodes=129):
        """Sup-norm gaps between the finite-difference quotient of G and the
        linearized balance, one entry per scaling in ``s_values``.

        For a correct linearization the sequence decreases to zero at first
        order in s.
        """
        coeffs = self.linear_coefficients(terms=terms)
        nodes = lobatto_nodes(0.0, self.params.eps, n_nodes)
        lin = frechet_apply(coeffs, shape)(nodes)
        gaps = []
        for s in s_values:
            quot = np.array([self.g_difference(shape, s, t, terms) for t in nodes]) / s
            gaps.append(float(np.max(np.abs(quot - lin))))
        return np.array(gaps)
