import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from pmedipole.barriers import (
    Barrier,
    Kind,
    Region,
    barrier_eval,
    barrier_factor,
    barrier_residual,
    barrier_residual_fd,
    c_delta,
    make_pair,
    region_params,
    shift_bound,
)
from pmedipole.errors import DomainError, InvalidParameter
from pmedipole.exact_solutions import build_profile


@pytest.fixture(scope="module")
def p2():
    return build_profile(2.0)


def ode_factor(m, f0, T, t_end):
    # t f' = -(1/m)(f^m - f), integrated numerically
    sol = solve_ivp(lambda t, f: -(f**m - f) / (m * t), (T, t_end), [f0], rtol=1e-12, atol=1e-14, method="DOP853")
    return sol.y[0, -1]


def test_factor_hand_value(p2):
    sup, sub = make_pair(p2, T=1.0, a=0.01, k0=2.0, c0=0.5)
    assert barrier_factor(sup, 4.0) == pytest.approx(4 / 3, rel=1e-15)
    assert barrier_factor(sup, 1.0) == pytest.approx(2.0, rel=1e-15)
    assert barrier_factor(sub, 1.0) == pytest.approx(0.5, rel=1e-15)
    # c(4) = 1/(1 + 1 * 1/2)
    assert barrier_factor(sub, 4.0) == pytest.approx(2 / 3, rel=1e-15)


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0, 5.0])
@pytest.mark.parametrize("f0", [0.2, 0.5, 1.5, 3.0])
def test_factor_matches_ode(m, f0):
    p = build_profile(m)
    kind = Kind.SUPER if f0 > 1 else Kind.SUB
    b = Barrier(kind, p, 0.01, 2.0, f0)
    for t_end in (3.0, 50.0, 1e4):
        assert barrier_factor(b, t_end) == pytest.approx(ode_factor(m, f0, 2.0, t_end), rel=1e-9)


@given(m=st.floats(1.1, 6), k0=st.floats(1.001, 10), c0=st.floats(0.01, 0.999), s=st.floats(0, 12))
@settings(max_examples=80, deadline=None)
def test_factors_monotone_towards_one(m, k0, c0, s):
    p = build_profile(m)
    sup, sub = make_pair(p, T=1.0, a=0.5, k0=k0, c0=c0)
    t = np.array([1.0, np.exp(s), np.exp(s) * 2])
    k = barrier_factor(sup, t)
    c = barrier_factor(sub, t)
    assert np.all(k >= 1) and np.all(np.diff(k) <= 1e-15)
    assert np.all(c <= 1) and np.all(np.diff(c) >= -1e-15)


def test_factor_rejects_early_time(p2):
    sup, _ = make_pair(p2, T=2.0, a=0.01, k0=2.0, c0=0.5)
    with pytest.raises(DomainError):
        barrier_factor(sup, 1.0)
    with pytest.raises(DomainError):
        barrier_eval(sup, 0.5, 1.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind=Kind.SUPER, a=0.01, T=1.0, factor0=1.0),
        dict(kind=Kind.SUB, a=0.01, T=1.0, factor0=1.0),
        dict(kind=Kind.SUB, a=0.01, T=1.0, factor0=0.0),
        dict(kind=Kind.SUPER, a=0.0, T=1.0, factor0=2.0),
        dict(kind=Kind.SUPER, a=1.0, T=1.0, factor0=2.0),
        dict(kind=Kind.SUPER, a=0.1, T=0.0, factor0=2.0),
        dict(kind="sideways", a=0.1, T=1.0, factor0=2.0),
    ],
)
def test_barrier_validation(p2, kwargs):
    with pytest.raises((InvalidParameter, ValueError)):
        Barrier(profile=p2, **kwargs)


def test_barrier_values(p2):
    sup, sub = make_pair(p2, T=1.0, a=0.1, k0=2.0, c0=0.5)
    t = 16.0
    # k(16) = 1/(1 - 1/2 * 1/4), c(16) = 1/(1 + 1/4)
    assert barrier_eval(sup, 0.9, t) == pytest.approx(8 / 7 * 0.25 * p2.F(0.5), rel=1e-14)
    assert barrier_eval(sub, 1.1, t) == pytest.approx(4 / 5 * 0.25 * p2.F(0.5), rel=1e-14)
    # subsolution vanishes on x <= a
    assert barrier_eval(sub, 0.05, t) == 0.0
    assert barrier_eval(sub, 0.1, t) == 0.0
    # supersolution is positive at the boundary
    assert barrier_eval(sup, 0.0, t) > 0


def test_barriers_bracket_dipole_in_region(p2):
    sup, sub = make_pair(p2, T=4.0, a=0.01, k0=2.0, c0=0.5)
    for t in (4.0, 16.0, 256.0):
        xs = np.linspace(0.02, 0.9 * p2.xi_bar * t**0.25, 400)
        d = p2.D(xs, t)
        assert np.all(sup(xs, t) >= d)
        assert np.all(sub(xs, t) <= d)


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
def test_residual_signs(m):
    p = build_profile(m)
    delta_bar, T_bar = region_params(p)
    sup, sub = make_pair(p, T=T_bar, a=0.01, k0=2.0, c0=0.5)
    beta = p.exponents.beta
    for t in T_bar * np.array([1.0, 2.0, 10.0, 100.0]):
        for x in np.linspace(0.02, 0.99 * delta_bar * t**beta, 25):
            assert barrier_residual(sup, x, t) >= 0
            assert barrier_residual(sub, x, t) <= 0


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
def test_residual_matches_finite_differences(m):
    p = build_profile(m)
    delta_bar, T_bar = region_params(p)
    beta = p.exponents.beta
    for b in make_pair(p, T=T_bar, a=0.05, k0=2.0, c0=0.5):
        for t in (1.5 * T_bar, 5 * T_bar):
            for frac in (0.3, 0.6, 0.9):
                x = frac * delta_bar * t**beta
                exact = barrier_residual(b, x, t)
                fd = barrier_residual_fd(b, x, t, 1e-3)
                assert fd == pytest.approx(exact, abs=1e-6 + 1e-3 * abs(exact))


def test_residual_vanishes_for_unit_factor(p2):
    # with f = 1 the barrier is the shifted dipole, an exact solution
    b = Barrier(Kind.SUPER, p2, 0.05, 1.0, 1.0 + 1e-15)
    assert abs(barrier_residual(b, 1.0, 3.0)) < 1e-15
    assert abs(barrier_residual_fd(b, 1.0, 3.0, 1e-3)) < 1e-6


def test_residual_outside_support(p2):
    sup, _ = make_pair(p2, T=1.0, a=0.01, k0=2.0, c0=0.5)
    with pytest.raises(DomainError):
        barrier_residual(sup, 10.0, 1.0)


def test_region_params_m2(p2):
    delta_bar, T_bar = region_params(p2)
    assert delta_bar == pytest.approx(0.9 * p2.xi_bar / 2, rel=1e-14)
    assert T_bar == pytest.approx(delta_bar**-4, rel=1e-14)
    assert delta_bar * T_bar**0.25 == pytest.approx(1.0, rel=1e-14)


def test_region_params_scale_with_moment():
    p = build_profile(3.0, 4.0)
    delta_bar, _ = region_params(p)
    assert delta_bar == pytest.approx(0.9 * p.xi_bar * 4 ** (1 / 3) / 2, rel=1e-12)
    assert delta_bar == pytest.approx(0.45 * p.peak_xi, rel=1e-14)


def test_region_membership():
    r = Region(delta=0.5, T=16.0, beta=0.25, a=0.1)
    assert r.upper(16.0) == pytest.approx(1.0)
    got = r.contains(np.array([0.05, 0.1, 0.5, 0.99, 1.0]), 16.0)
    assert got.tolist() == [False, False, True, True, False]
    assert not r.contains(0.5, 15.0)


def test_c_delta(p2):
    delta_bar, _ = region_params(p2)
    d = 0.5 * delta_bar
    assert c_delta(p2, d) == pytest.approx(1 / (p2.C_m - p2.kappa_m * d**1.5) / d**0.5, rel=1e-13)
    with pytest.raises(DomainError):
        c_delta(p2, delta_bar)
    with pytest.raises(DomainError):
        c_delta(p2, 0.0)


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
def test_shift_bound_dominates_actual_shift(m):
    # shifting the profile by a changes it by at most m K a^{1/m} on [0, xi_hat]
    p = build_profile(m)
    for a in (1e-3, 1e-2, 1e-1):
        assert shift_bound(p, a) == pytest.approx(m * p.K_bound * a ** (1 / m), rel=1e-14)
        xs = np.linspace(1e-6, p.xi_hat - a, 2000)
        diff = np.abs(p.F(xs + a) - p.F(xs))
        assert np.max(diff) <= shift_bound(p, a)


def test_shift_bound_moment_scaling():
    p1 = build_profile(2.0, 1.0)
    p4 = build_profile(2.0, 4.0)
    assert shift_bound(p4, 0.01) / shift_bound(p1, 0.01) == pytest.approx(4 ** (3 / 8), rel=1e-6)
