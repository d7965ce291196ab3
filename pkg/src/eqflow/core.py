"""Core types shared by the whole engine: physical parameters, density
stratification models, azimuthal momentum profiles, and sampling grids.

Everything here is immutable after construction; evaluators are pure
functions of their arguments and safe to call concurrently.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline, RectBivariateSpline


class ParameterError(ValueError):
    """A physical or numerical parameter violates its invariant."""


class DomainError(ValueError):
    """Evaluation requested outside a declared domain."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not converge to the requested tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


def integrate_tol(f, lo, hi, tol):
    """Adaptive Gauss-Kronrod integral of ``f`` over [lo, hi].

    ``tol`` is used as both the absolute and relative target.  Raises
    :class:`QuadratureError` with the achieved error estimate when the
    routine reports nonconvergence.  ``lo > hi`` integrates with sign,
    ``lo == hi`` returns 0 without evaluating ``f``.
    """
    if lo == hi:
        return 0.0
    out = integrate.quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=200,
                         full_output=True)
    if len(out) == 4:
        raise QuadratureError(
            f"quadrature over [{lo:g}, {hi:g}] did not converge: {out[3]} "
            f"(error estimate {out[1]:.3e})", estimate=out[1])
    return out[0]


def lobatto_nodes(lo, hi, n):
    """``n`` Chebyshev-Lobatto points on [lo, hi], ascending, endpoints included."""
    if n < 2:
        raise ValueError("need at least 2 nodes")
    k = np.arange(n)
    return lo + (hi - lo) * 0.5 * (1.0 - np.cos(np.pi * k / (n - 1)))


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Parameters:
    """Physical constants and solver tolerances, SI units throughout.

    ``A`` is the pressure integration constant (the free gauge of the
    pressure formula).  ``None`` selects the default gauge in which the
    undisturbed surface pressure equals the atmospheric reference at the
    equator.
    """

    Omega: float = 7.29e-5      # rotation rate, rad/s
    g: float = 9.81             # gravitational acceleration, m/s^2
    sigma: float = 0.0728       # surface tension coefficient, N/m
    P_atm: float = 101325.0     # reference pressure, Pa
    R: float = 6.37e6           # reference surface radius, m
    a: float = 6.36e6           # reference lower radius for pressure integration, m
    eps: float = 0.016          # angular half-width of the equatorial strip, rad
    A: float | None = None      # pressure gauge constant, Pa (None -> default gauge)
    tol_quad: float = 1e-10
    tol_ode: float = 1e-10
    tol_newton: float = 1e-9

    @property
    def r_max(self):
        """Upper radius of the evaluation domain (covers perturbed surfaces)."""
        return 1.1 * self.R

    def with_A(self, A):
        return replace(self, A=float(A))


def validate_parameters(p: Parameters) -> Parameters:
    """Check every Parameters invariant; return ``p`` unchanged when valid.

    Idempotent.  The first violated invariant is reported by name.
    """
    if not p.Omega > 0:
        raise ParameterError("Omega must be positive")
    if not p.g > 0:
        raise ParameterError("g must be positive")
    if not p.sigma >= 0:
        raise ParameterError("sigma must be nonnegative")
    if not p.P_atm > 0:
        raise ParameterError("P_atm must be positive")
    if not p.R > 0:
        raise ParameterError("R must be positive")
    if not 0 < p.a < p.R:
        raise ParameterError("a must satisfy 0 < a < R")
    if not p.eps > 0:
        raise ParameterError("eps must be positive")
    if not p.eps < math.pi / 2:
        raise ParameterError("eps must be less than pi/2")
    for name in ("tol_quad", "tol_ode", "tol_newton"):
        if not getattr(p, name) > 0:
            raise ParameterError(f"{name} must be positive")
    return p


# ---------------------------------------------------------------------------
# Density models
# ---------------------------------------------------------------------------

# 4th-order finite-difference stencils for the theta-derivative fallback.
_FD_CENTRAL = (np.array([-2, -1, 1, 2]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0)
_FD_FORWARD = (np.arange(5), np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0)
_FD_BACKWARD = (-np.arange(5)[::-1], -np.array([-25.0, 48.0, -36.0, 16.0, -3.0])[::-1] / 12.0)


class DensityModel:
    """Density field rho(r, theta) on the annular equatorial strip.

    Subclasses provide a vectorized ``rho``; ``rho_theta`` defaults to a
    fourth-order finite-difference fallback in theta (central stencil,
    switching to one-sided stencils within two steps of the strip edge).
    """

    model_name = "base"

    def __init__(self, r_range, theta_bound, fd_step=None):
        self.r_range = (float(r_range[0]), float(r_range[1]))
        self.theta_bound = float(theta_bound)
        self.fd_step = 1e-4 * self.theta_bound if fd_step is None else float(fd_step)

    def rho(self, r, theta):
        raise NotImplementedError

    def rho_theta(self, r, theta):
        return self.fd_rho_theta(r, theta)

    def fd_rho_theta(self, r, theta, step=None):
        """Finite-difference theta-derivative of rho, O(h^4)."""
        h = self.fd_step if step is None else float(step)
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        r, theta = np.broadcast_arrays(r, theta)
        out = np.empty(theta.shape)
        hi = self.theta_bound
        for idx in np.ndindex(theta.shape):
            th = theta[idx]
            if th + 2 * h > hi:
                offs, coef = _FD_BACKWARD
            elif th - 2 * h < -hi:
                offs, coef = _FD_FORWARD
            else:
                offs, coef = _FD_CENTRAL
            out[idx] = np.dot(coef, self.rho(r[idx], th + offs * h)) / h
        return out[()]

    def check_domain(self, r, theta):
        r_lo, r_hi = self.r_range
        slack_r = 1e-9 * max(abs(r_lo), abs(r_hi))
        if not (r_lo - slack_r <= r <= r_hi + slack_r):
            raise DomainError(f"r={r:g} outside density domain [{r_lo:g}, {r_hi:g}]")
        if not abs(theta) <= self.theta_bound * (1 + 1e-12):
            raise DomainError(
                f"theta={theta:g} outside density domain "
                f"[-{self.theta_bound:g}, {self.theta_bound:g}]")


class ConstantDensity(DensityModel):
    model_name = "constant"

    def __init__(self, rho0, r_range, theta_bound):
        super().__init__(r_range, theta_bound)
        self.rho0 = float(rho0)

    def rho(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        return np.full(r.shape, self.rho0)[()]

    def rho_theta(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        return np.zeros(r.shape)[()]


class LinearDepthDensity(DensityModel):
    """rho0 * (1 + alpha * (R - r) / R): density increasing with depth."""

    model_name = "linear"

    def __init__(self, rho0, alpha, R, r_range, theta_bound):
        super().__init__(r_range, theta_bound)
        self.rho0, self.alpha, self.R = float(rho0), float(alpha), float(R)

    def rho(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        return (self.rho0 * (1.0 + self.alpha * (self.R - r) / self.R))[()]

    def rho_theta(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        return np.zeros(r.shape)[()]


class LatitudeQuadraticDensity(DensityModel):
    """rho0 * (1 + alpha * (R - r) / R + beta * theta^2)."""

    model_name = "latitude_quadratic"

    def __init__(self, rho0, alpha, beta, R, r_range, theta_bound):
        super().__init__(r_range, theta_bound)
        self.rho0, self.alpha, self.beta = float(rho0), float(alpha), float(beta)
        self.R = float(R)

    def rho(self, r, theta):
        r = np.asarray(r, float)
        theta = np.asarray(theta, float)
        return (self.rho0 * (1.0 + self.alpha * (self.R - r) / self.R
                             + self.beta * theta ** 2))[()]

    def rho_theta(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        return (2.0 * self.rho0 * self.beta * theta)[()]


class TabulatedDensity(DensityModel):
    """Density sampled on a tensor grid, evaluated by bicubic interpolation.

    The theta-derivative comes from the spline itself.
    """

    model_name = "tabulated"

    def __init__(self, r_nodes, theta_nodes, values, r_range=None, theta_bound=None):
        r_nodes = np.asarray(r_nodes, float)
        theta_nodes = np.asarray(theta_nodes, float)
        values = np.asarray(values, float)
        if values.shape != (r_nodes.size, theta_nodes.size):
            raise ValueError("values shape must be (len(r_nodes), len(theta_nodes))")
        if r_range is None:
            r_range = (r_nodes[0], r_nodes[-1])
        if theta_bound is None:
            theta_bound = max(abs(theta_nodes[0]), abs(theta_nodes[-1]))
        super().__init__(r_range, theta_bound)
        self._spline = RectBivariateSpline(r_nodes, theta_nodes, values, kx=3, ky=3)

    def rho(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        return self._spline.ev(r, theta)[()]

    def rho_theta(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        return self._spline.ev(r, theta, dy=1)[()]


class CallableDensity(DensityModel):
    """Wraps a user-supplied rho(r, theta); the theta-derivative uses the
    finite-difference fallback unless an analytic one is supplied."""

    model_name = "callable"

    def __init__(self, fn, r_range, theta_bound, rho_theta_fn=None, fd_step=None):
        super().__init__(r_range, theta_bound, fd_step=fd_step)
        self._fn = fn
        self._dfn = rho_theta_fn

    def rho(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        return np.asarray(self._fn(r, theta), float)[()]

    def rho_theta(self, r, theta):
        if self._dfn is None:
            return self.fd_rho_theta(r, theta)
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        return np.asarray(self._dfn(r, theta), float)[()]


DENSITY_MODELS = {
    "constant": ConstantDensity,
    "linear": LinearDepthDensity,
    "latitude_quadratic": LatitudeQuadraticDensity,
    "tabulated": TabulatedDensity,
}


def make_density(name, params: Parameters, **kwargs) -> DensityModel:
    """Instantiate a registered density model wired to the parameter domain."""
    if name not in DENSITY_MODELS:
        raise ParameterError(
            f"unknown density model '{name}' (known: {sorted(DENSITY_MODELS)})")
    r_range = (params.a * math.cos(params.eps), params.r_max)
    if name == "constant":
        return ConstantDensity(kwargs.get("rho0", 1000.0), r_range, params.eps)
    if name == "linear":
        return LinearDepthDensity(kwargs.get("rho0", 1000.0),
                                  kwargs.get("alpha", 0.0), params.R,
                                  r_range, params.eps)
    if name == "latitude_quadratic":
        return LatitudeQuadraticDensity(kwargs.get("rho0", 1000.0),
                                        kwargs.get("alpha", 0.0),
                                        kwargs.get("beta", 0.0), params.R,
                                        r_range, params.eps)
    return TabulatedDensity(kwargs["r_nodes"], kwargs["theta_nodes"],
                            kwargs["values"], r_range=r_range,
                            theta_bound=params.eps)


def eval_density(model: DensityModel, r, theta):
    """Evaluate (rho, rho_theta) at a point, with domain checking."""
    model.check_domain(r, theta)
    rho = float(model.rho(r, theta))
    if rho <= 0:
        raise DomainError(f"density nonpositive at (r={r:g}, theta={theta:g})")
    return rho, float(model.rho_theta(r, theta))


# ---------------------------------------------------------------------------
# Azimuthal momentum profiles
# ---------------------------------------------------------------------------

class Profile:
    """Smooth profile f(x) fixing the azimuthal momentum density along the
    equatorial plane.  Declared on [a*cos(eps), r_max], safely away from 0
    so that f(x)/x is well defined."""

    model_name = "base"

    def __init__(self, domain):
        self.domain = (float(domain[0]), float(domain[1]))
        if self.domain[0] <= 0:
            raise ParameterError("profile domain must exclude a neighborhood of 0")

    def __call__(self, x):
        raise NotImplementedError

    def check_domain(self, x):
        lo, hi = self.domain
        slack = 1e-9 * hi
        if not (lo - slack <= x <= hi + slack):
            raise DomainError(f"x={x:g} outside profile domain [{lo:g}, {hi:g}]")


class ZeroProfile(Profile):
    model_name = "zero"

    def __call__(self, x):
        return np.zeros_like(np.asarray(x, float))[()]


class LinearProfile(Profile):
    """f(x) = k * x, so f(x)/x is the constant k."""

    model_name = "linear"

    def __init__(self, k, domain):
        super().__init__(domain)
        self.k = float(k)

    def __call__(self, x):
        return (self.k * np.asarray(x, float))[()]


class TabulatedProfile(Profile):
    model_name = "tabulated"

    def __init__(self, x_nodes, values, domain=None):
        x_nodes = np.asarray(x_nodes, float)
        values = np.asarray(values, float)
        if domain is None:
            domain = (x_nodes[0], x_nodes[-1])
        super().__init__(domain)
        self._spline = CubicSpline(x_nodes, values)

    def __call__(self, x):
        return self._spline(np.asarray(x, float))[()]


PROFILE_MODELS = {"zero": ZeroProfile, "linear": LinearProfile,
                  "tabulated": TabulatedProfile}


def make_profile(name, params: Parameters, **kwargs) -> Profile:
    if name not in PROFILE_MODELS:
        raise ParameterError(
            f"unknown profile model '{name}' (known: {sorted(PROFILE_MODELS)})")
    domain = (params.a * math.cos(params.eps), params.r_max)
    if name == "zero":
        return ZeroProfile(domain)
    if name == "linear":
        return LinearProfile(kwargs.get("k", 0.0), domain)
    return TabulatedProfile(kwargs["x_nodes"], kwargs["values"], domain=domain)


# ---------------------------------------------------------------------------
# Grids and gridded flow state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid2D:
    """Tensor grid: ascending radii by ascending strip angles."""

    r_nodes: np.ndarray
    theta_nodes: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r_nodes, float)
        th = np.asarray(self.theta_nodes, float)
        if r.ndim != 1 or th.ndim != 1:
            raise ValueError("node arrays must be one-dimensional")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(th) <= 0):
            raise ValueError("node arrays must be strictly increasing")
        object.__setattr__(self, "r_nodes", r)
        object.__setattr__(self, "theta_nodes", th)

    @property
    def shape(self):
        return (self.r_nodes.size, self.theta_nodes.size)

    def meshed(self):
        return np.meshgrid(self.r_nodes, self.theta_nodes, indexing="ij")

    @classmethod
    def default(cls, params: Parameters, nr=50, ntheta=50):
        """Uniform radii on [a, R], Chebyshev-Lobatto angles on [0, eps]."""
        return cls(np.linspace(params.a, params.R, nr),
                   lobatto_nodes(0.0, params.eps, ntheta))


@dataclass(frozen=True)
class ScalarField2D:
    grid: Grid2D
    values: np.ndarray
    role: str = "field"

    def __post_init__(self):
        v = np.asarray(self.values, float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class FlowState:
    """Gridded azimuthal velocity, pressure, and the derived combinations
    U = 2w + r*Omega*cos(theta) and Z = rho*r*Omega*U*cos(theta)."""

    w: ScalarField2D
    p: ScalarField2D
    U: ScalarField2D
    Z: ScalarField2D

    @classmethod
    def from_velocity(cls, grid, w_values, p_values, density, params):
        rr, tt = grid.meshed()
        w_values = np.asarray(w_values, float)
        U = 2.0 * w_values + rr * params.Omega * np.cos(tt)
        Z = density.rho(rr, tt) * rr * params.Omega * U * np.cos(tt)
        return cls(ScalarField2D(grid, w_values, "w"),
                   ScalarField2D(grid, p_values, "p"),
                   ScalarField2D(grid, U, "U"),
                   ScalarField2D(grid, Z, "Z"))

    def validate(self, density, params, rtol=1e-13):
        """Check the defining pointwise identities to round-off."""
        grid = self.w.grid
        rr, tt = grid.meshed()
        U_exp = 2.0 * self.w.values + rr * params.Omega * np.cos(tt)
        scale_U = np.max(np.abs(U_exp)) + params.Omega * params.R
        if np.max(np.abs(self.U.values - U_exp)) > rtol * scale_U:
            raise ValueError("U field inconsistent with 2w + r*Omega*cos(theta)")
        Z_exp = density.rho(rr, tt) * rr * params.Omega * self.U.values * np.cos(tt)
        scale_Z = np.max(np.abs(Z_exp)) + 1.0
        if np.max(np.abs(self.Z.values - Z_exp)) > rtol * scale_Z:
            raise ValueError("Z field inconsistent with rho*r*Omega*U*cos(theta)")
