import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ductflow.domain import DomainSpec, build_domain
from ductflow.errors import MissingDerivativeError
from ductflow.fields import FieldHistory, ScalarField, scalar_from_samples
from ductflow.norms import INF, Family, NormSpec, energy_norm_V, norm


def unit_grid(n=(8, 8, 16)):
    spec = DomainSpec(L1=1.0, L2=1.0, a=1.0, N1=n[0], N2=n[1], N3=n[2])
    _, grid = build_domain(spec)
    return grid


def test_constant_l2_is_sqrt_volume():
    grid = unit_grid()
    f = ScalarField(values=np.ones(grid.shape), grid=grid)
    assert abs(norm(f, NormSpec(Family.LP, p=2)) - math.sqrt(2.0)) < 1e-13


def test_constant_weighted_l2_closed_form():
    # weight = dist to caps; p mu = 1 makes the x3 integral 2 * int_0^1 y dy = 1
    grid = unit_grid()
    f = ScalarField(values=np.ones(grid.shape), grid=grid)
    val = norm(f, NormSpec(Family.WEIGHTED_LP, p=2, mu=0.5))
    assert abs(val - 1.0) < 1e-13


def test_single_mode_sobolev_norm_oracle():
    # u = sin(pi x3 / 2) = -cos(pi (x3+1)/2): ||u||^2 = 1,
    # ||d3 u||^2 = pi^2 / 4; hand integrals done before implementation.
    grid = unit_grid()
    _, _, X3 = grid.meshgrid()
    u = np.sin(np.pi * X3 / 2.0)
    f = scalar_from_samples(u, grid)
    expected = math.sqrt(1.0 + math.pi**2 / 4.0)
    got = norm(f, NormSpec(Family.SOBOLEV, k=1, p=2))
    assert abs(got - expected) < 1e-11


def test_sobolev_requires_derivatives():
    grid = unit_grid()
    f = ScalarField(values=np.ones(grid.shape), grid=grid)
    with pytest.raises(MissingDerivativeError):
        norm(f, NormSpec(Family.SOBOLEV, k=1, p=2))


def test_linf_is_grid_max():
    grid = unit_grid()
    vals = np.ones(grid.shape)
    vals[3, 4, 5] = -7.5
    f = ScalarField(values=vals, grid=grid)
    assert norm(f, NormSpec(Family.LP, p=INF)) == 7.5


def test_aniso_00_equals_lp():
    grid = unit_grid()
    rng = np.random.default_rng(3)
    f = ScalarField(values=rng.standard_normal(grid.shape), grid=grid)
    for p in (1.0, 2.0, 3.0):
        a = norm(f, NormSpec(Family.ANISO, k=0, p=p, p2=p))
        b = norm(f, NormSpec(Family.LP, p=p))
        assert abs(a - b) <= 1e-12 * max(1.0, b)


def test_aniso_sup_slab():
    grid = unit_grid()
    _, _, X3 = grid.meshgrid()
    f = ScalarField(values=1.0 + X3**2, grid=grid)
    # L2 over each slab of a function of x3 only is |value| * sqrt(area)
    got = norm(f, NormSpec(Family.ANISO, k=0, p=2.0, p2=INF))
    expected = float(np.max(1.0 + grid.x3**2))
    assert abs(got - expected) < 1e-12


def test_weighted_lp_dominated_by_max_weight():
    grid = unit_grid()
    rng = np.random.default_rng(11)
    f = ScalarField(values=rng.standard_normal(grid.shape), grid=grid)
    for mu in (0.25, 0.5, 0.9):
        w = norm(f, NormSpec(Family.WEIGHTED_LP, p=3, mu=mu))
        plain = norm(f, NormSpec(Family.LP, p=3))
        assert w <= grid.spec.a**mu * plain + 1e-12


@settings(max_examples=25, deadline=None)
@given(
    mu_lo=st.floats(0.05, 0.45),
    dmu=st.floats(0.05, 0.5),
    p=st.sampled_from([2.0, 3.0]),
)
def test_weighted_monotone_in_mu_for_boundary_supported_bump(mu_lo, dmu, p):
    # Bump supported where the weight is < 1, so a larger exponent shrinks
    # the weight pointwise and with it the norm.
    grid = unit_grid()
    _, _, X3 = grid.meshgrid()
    bump = np.exp(-60.0 * (X3 + 0.7) ** 2)
    f = ScalarField(values=bump, grid=grid)
    lo = norm(f, NormSpec(Family.WEIGHTED_LP, p=p, mu=mu_lo))
    hi = norm(f, NormSpec(Family.WEIGHTED_LP, p=p, mu=min(0.99, mu_lo + dmu)))
    assert hi <= lo * (1.0 + 1e-12)


def test_invalid_norm_parameters():
    with pytest.raises(ValueError):
        NormSpec(Family.LP, p=0.5)
    with pytest.raises(ValueError):
        NormSpec(Family.WEIGHTED_LP, p=2, mu=1.5)


def test_energy_norm_constant_history():
    grid = unit_grid()
    c = 2.5
    entries = [
        scalar_from_samples(np.full(grid.shape, c), grid) for _ in range(3)
    ]
    hist = FieldHistory(times=np.array([0.0, 0.5, 1.0]), entries=entries)
    assert abs(energy_norm_V(hist) - c * math.sqrt(2.0)) < 1e-11


def test_energy_norm_zero_history():
    grid = unit_grid()
    entries = [scalar_from_samples(np.zeros(grid.shape), grid) for _ in range(2)]
    hist = FieldHistory(times=np.array([0.0, 1.0]), entries=entries)
    assert energy_norm_V(hist) == 0.0


def test_energy_norm_rejects_single_sample():
    grid = unit_grid()
    entries = [scalar_from_samples(np.zeros(grid.shape), grid)]
    with pytest.raises(ValueError):
        energy_norm_V(FieldHistory(times=np.array([0.0]), entries=entries))


def test_energy_norm_decaying_mode_oracle():
    # u(t) = exp(-lam t) cos(pi (x3+1)/2): analytic time integral of
    # exp(-2 lam t) gives V = 1 + sqrt(pi^2/4 * (1 - e^(-2 lam T)) / (2 lam)).
    grid = unit_grid()
    _, _, X3 = grid.meshgrid()
    mode = np.cos(np.pi * (X3 + 1.0) / 2.0)
    lam, T, nt = 1.0, 1.0, 2001
    times = np.linspace(0.0, T, nt)
    entries = [scalar_from_samples(math.exp(-lam * t) * mode, grid) for t in times]
    hist = FieldHistory(times=times, entries=entries)
    expected = 1.0 + math.sqrt(
        (math.pi**2 / 4.0) * (1.0 - math.exp(-2.0 * lam * T)) / (2.0 * lam)
    )
    got = energy_norm_V(hist)
    assert abs(got - expected) < 5e-7 * expected


def test_spacetime_norm_constant_history():
    # |u|_{p,q,Q^t} = (int_0^T ||u||_p^q dt)^{1/q}; constant field closed form
    grid = unit_grid()
    c = 2.0
    entries = [
        scalar_from_samples(np.full(grid.shape, c), grid, with_derivatives=False)
        for _ in range(5)
    ]
    hist = FieldHistory(times=np.linspace(0.0, 1.0, 5), entries=entries)
    got = norm(hist, NormSpec(Family.SPACETIME, p=2, q=4))
    expected = (c * math.sqrt(2.0) ** 1.0) * 1.0 ** (1 / 4)  # ||u||_2 = c sqrt(|O|)
    assert abs(got - c * math.sqrt(2.0)) < 1e-12
    sup = norm(hist, NormSpec(Family.SPACETIME, p=2, q=INF))
    assert abs(sup - c * math.sqrt(2.0)) < 1e-12


def test_v1_norm_constant_history():
    # constant field: gradient and Hessian terms vanish, V1 = sup H1 = L2
    grid = unit_grid()
    c = 1.5
    entries = [scalar_from_samples(np.full(grid.shape, c), grid) for _ in range(3)]
    hist = FieldHistory(times=np.array([0.0, 0.5, 1.0]), entries=entries)
    got = norm(hist, NormSpec(Family.V1))
    assert abs(got - c * math.sqrt(2.0)) < 1e-10
