import numpy as np
import pytest

from eqflow import (FlowField, Parameters, SurfaceFunctional, make_density,
                    make_profile)

DESK = dict(Omega=1.0, g=1.0, sigma=0.1, P_atm=1.0, R=1.0, a=0.9, eps=0.016)


def simpson(f, a, b, n):
    """Composite Simpson on n panels (n even), vectorized integrand."""
    if a == b:
        return 0.0
    if n % 2:
        n += 1
    x = np.linspace(a, b, n + 1)
    y = np.asarray(f(x), float)
    h = (b - a) / n
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def strat_simpson(density, g, y, theta, n=20000):
    """Brute-force value of the along-characteristic stratification integral."""
    s0 = np.arctanh(np.sin(theta))
    return g * simpson(
        lambda s: density.rho_theta(y * np.cosh(s), np.arcsin(np.tanh(s))),
        0.0, s0, n)


def pressure_simpson(flow, r, theta, n_outer=2000, n_inner=20000):
    """Brute-force nested-quadrature pressure, independent of the flow's
    adaptive machinery (shares only the resolved gauge constant)."""
    p = flow.params
    dens, prof = flow.density, flow.profile
    grav = simpson(lambda x: dens.rho(x, theta), p.a, r, n_outer)

    def strat_at(y):
        return strat_simpson(dens, p.g, y, theta, n_inner)

    ys = np.linspace(p.a * np.cos(theta), r * np.cos(theta), n_outer + 1)
    mid_vals = np.array([prof(y) / y + strat_at(y) for y in ys])
    h = (ys[-1] - ys[0]) / n_outer
    mid = h / 3.0 * (mid_vals[0] + mid_vals[-1] + 4.0 * mid_vals[1:-1:2].sum()
                     + 2.0 * mid_vals[2:-1:2].sum())

    i_mom = simpson(lambda x: np.tan(x) * prof(p.a * np.cos(x)), 0.0, theta, n_outer)
    xs = np.linspace(0.0, theta, n_outer + 1)
    strat_edge = np.array([strat_simpson(dens, p.g, p.a * np.cos(x), x, 2000)
                           for x in xs])
    hh = theta / n_outer if theta else 0.0
    i_strat = hh / 3.0 * (strat_edge[0] * np.sin(xs[0]) + strat_edge[-1] * np.sin(xs[-1])
                          + 4.0 * (strat_edge[1:-1:2] * np.sin(xs[1:-1:2])).sum()
                          + 2.0 * (strat_edge[2:-1:2] * np.sin(xs[2:-1:2])).sum())
    ctilde = flow.A - i_mom - p.a * i_strat
    return ctilde - p.g * grav + mid


@pytest.fixture(scope="session")
def desk_params():
    return Parameters(**DESK)


@pytest.fixture(scope="session")
def desk_flow(desk_params):
    return FlowField(desk_params, make_density("constant", desk_params, rho0=1.0),
                     make_profile("zero", desk_params))


@pytest.fixture(scope="session")
def desk_functional(desk_flow):
    return SurfaceFunctional(desk_flow)


@pytest.fixture(scope="session")
def desk_strat_params():
    return Parameters(**DESK)


@pytest.fixture(scope="session")
def desk_strat_flow(desk_strat_params):
    density = make_density("latitude_quadratic", desk_strat_params,
                           rho0=1.0, alpha=0.1, beta=5.0)
    profile = make_profile("linear", desk_strat_params, k=0.05)
    return FlowField(desk_strat_params, density, profile)


@pytest.fixture(scope="session")
def desk_strat_functional(desk_strat_flow):
    return SurfaceFunctional(desk_strat_flow)


@pytest.fixture(scope="session")
def physical_params():
    return Parameters()


@pytest.fixture(scope="session")
def physical_quadratic_flow(physical_params):
    density = make_density("latitude_quadratic", physical_params,
                           rho0=1000.0, alpha=5.0, beta=0.5)
    profile = make_profile("linear", physical_params, k=0.07)
    return FlowField(physical_params, density, profile)
