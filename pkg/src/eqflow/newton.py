"""Quasi-Newton solution of the surface balance F(H, P) = 0 for the shape H
given a surface pressure trace P near the undisturbed one.

The iteration freezes the linearized operator at the undisturbed state
(where the balance functional was linearized) and applies its inverse
through the linear-response solver, with backtracking damping.  This is the
constructive counterpart of the local existence statement: for pressure
variations inside a trust radius the frozen-derivative map is a
contraction.
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from numpy.polynomial import Chebyshev

from .core import DomainError, lobatto_nodes
from .odesolve import fundamental_solutions, solve_linear_response
from .surface import (PressureTrace, SurfaceFunctional, SurfaceShape,
                      _trim_tail)


class TrustRadiusError(ValueError):
    """The requested pressure lies outside the frozen-derivative trust region."""


@dataclass
class SolveReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False
    final_residual: float = math.nan
    damping_used: list = field(default_factory=list)
    message: str = ""

    def to_dict(self):
        return asdict(self)


def forward_map(functional: SurfaceFunctional, shape: SurfaceShape,
                degree=64) -> PressureTrace:
    """The pressure trace balancing a given shape exactly: P := G(H).

    By the additive structure of the balance, F(H, forward_map(H)) vanishes
    identically, which makes this the manufactured-solution oracle for the
    solver.
    """
    return PressureTrace.from_function(
        lambda th: functional.g_value(shape, th),
        functional.params.eps, degree=degree)


def _fit_trace(nodes, values, eps, degree):
    cheb = Chebyshev.fit(nodes, values, deg=degree, domain=[0.0, eps])
    return _trim_tail(cheb)


def newton_solve(functional: SurfaceFunctional, P: PressureTrace,
                 initial: SurfaceShape = None, trust_radius=1e-3,
                 max_iter=50, max_halvings=8, degree=32, n_nodes=129,
                 tol=None):
    """Find H with sup|F(H, P)| <= tol, starting from the undisturbed shape.

    Raises :class:`TrustRadiusError` when sup|P - P0| exceeds the trust
    radius, and propagates the conditioning errors of the linear solver.
    Non-convergence within ``max_iter`` returns a report with
    ``converged=False`` rather than raising.
    """
    p = functional.params
    tol = p.tol_newton if tol is None else tol
    nodes = lobatto_nodes(0.0, p.eps, n_nodes)
    P0 = functional.baseline_pressure()
    spread = float(np.max(np.abs(P(nodes) - P0(nodes))))
    if spread > trust_radius:
        raise TrustRadiusError(
            f"sup|P - P0| = {spread:.3e} exceeds the trust radius "
            f"{trust_radius:.1e} of the frozen-derivative iteration")

    coeffs = functional.linear_coefficients()
    basis = None
    gamma_nodes = None
    if coeffs.d > 0.0:
        basis = fundamental_solutions(coeffs, p.tol_ode)
    else:
        gamma_nodes = np.asarray(coeffs.gamma(nodes), float)
        if np.min(np.abs(gamma_nodes)) < 1e-12 * max(1.0, np.max(np.abs(gamma_nodes))):
            raise ValueError("gamma vanishes on the strip: the d = 0 balance "
                             "is not invertible pointwise")

    H = SurfaceShape.zero(p.eps) if initial is None else initial
    report = SolveReport()
    res_vals = functional.residual_values(H, P, nodes)
    res = float(np.max(np.abs(res_vals)))
    report.residual_history.append(res)

    for _ in range(max_iter):
        if res <= tol:
            report.converged = True
            break
        if coeffs.d > 0.0:
            phi = _fit_trace(nodes, -res_vals, p.eps, degree=min(64, n_nodes - 1))
            delta = solve_linear_response(coeffs, phi, tol_ode=p.tol_ode,
                                          tol_quad=p.tol_quad, basis=basis)
        else:
            delta = SurfaceShape.fit_values(nodes, -res_vals / gamma_nodes,
                                            p.eps, degree=min(64, n_nodes - 1))

        lam = 1.0
        accepted = False
        last_err = None
        for _ in range(max_halvings + 1):
            try:
                H_trial = (H + lam * delta).truncated(degree)
                trial_vals = functional.residual_values(H_trial, P, nodes)
            except DomainError as err:
                last_err = err
                lam *= 0.5
                continue
            trial_res = float(np.max(np.abs(trial_vals)))
            if trial_res < res:
                H, res_vals, res = H_trial, trial_vals, trial_res
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            if last_err is not None and report.iterations == 0:
                raise last_err
            report.message = ("residual stagnated: no damping factor down to "
                              f"2^-{max_halvings} decreased it")
            break
        report.iterations += 1
        report.residual_history.append(res)
        report.damping_used.append(lam)
    else:
        report.message = f"no convergence within {max_iter} iterations"

    if res <= tol:
        report.converged = True
    report.final_residual = res
    return H, report


def continuation_solve(functional: SurfaceFunctional, P_target: PressureTrace,
                       steps=1, **newton_kwargs):
    """Solve along the pressure homotopy from the undisturbed trace to the
    target in ``steps`` equal increments, warm-starting each solve.

    A failing step reports the last successful shape with diagnostics
    instead of raising.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    p = functional.params
    P0 = functional.baseline_pressure()
    H = SurfaceShape.zero(p.eps)
    total = SolveReport(converged=True)
    for k in range(1, steps + 1):
        frac = k / steps
        P_k = (P_target if k == steps else
               PressureTrace(lambda th, f=frac: P0(th) + f * (P_target(th) - P0(th)),
                             p.eps))
        try:
            H_k, rep = newton_solve(functional, P_k, initial=H, **newton_kwargs)
        except Exception as err:  # refusals and conditioning failures
            total.converged = False
            total.message = f"continuation failed at step {k}/{steps}: {err}"
            total.final_residual = math.nan
            return H, total
        H = H_k
        total.iterations += rep.iterations
        total.residual_history.extend(rep.residual_history)
        total.damping_used.extend(rep.damping_used)
        total.final_residual = rep.final_residual
        if not rep.converged:
            total.converged = False
            total.message = f"step {k}/{steps} did not converge: {rep.message}"
            return H, total
    return H, total
