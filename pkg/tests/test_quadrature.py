"""Tests for the quadrature core: rules, gamma, inversion, adaptive integration."""

import math

import numpy as np
import pytest

from halfharm.errors import (
    InvalidArgument,
    NumericalFailure,
    OutOfRange,
    PreconditionViolation,
)
from halfharm.quadrature import (
    IntegrationResult,
    Tolerance,
    adaptive_integrate,
    circle_rule,
    disc_rule,
    gamma_fn,
    gauss_legendre,
    hemisphere_rule,
    integrate,
    integrate_halfline,
    integrate_line,
    invert_monotone,
)

# ---------------------------------------------------------------- rule measures


def test_rules_integrate_constant_to_measure():
    one = lambda x: np.ones(np.shape(x)[0] if np.ndim(x) > 1 else np.shape(x) or 1)
    assert abs(integrate(gauss_legendre(5), lambda x: np.ones_like(x)) - 2.0) <= 1e-12
    assert abs(integrate(circle_rule(16), lambda t: np.ones_like(t)) - 2 * np.pi) <= 1e-12
    assert abs(integrate(disc_rule(8, 16), lambda z: np.ones(len(z))) - np.pi) <= 1e-12
    assert abs(integrate(hemisphere_rule(64, 32), one) - 2 * np.pi) <= 1e-12


def test_gauss_legendre_exactness_on_monomials():
    for n in range(1, 11):
        rule = gauss_legendre(n)
        for k in range(2 * n):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            got = integrate(rule, lambda x: x**k)
            assert abs(got - exact) <= 1e-13 * max(1.0, abs(exact)), (n, k)


def test_gauss_legendre_rejects_bad_n():
    with pytest.raises(InvalidArgument):
        gauss_legendre(0)
    with pytest.raises(InvalidArgument):
        circle_rule(1)
    with pytest.raises(InvalidArgument):
        disc_rule(4, 1)


def test_disc_rule_polynomial_moments():
    rule = disc_rule(8, 16)
    # frozen moments of the unit disc: area pi, int |z|^2 = pi/2, int x^2 = pi/4
    assert abs(integrate(rule, lambda z: np.abs(z) ** 2) - np.pi / 2) <= 1e-13
    assert abs(integrate(rule, lambda z: np.real(z) ** 2) - np.pi / 4) <= 1e-13
    assert abs(integrate(rule, lambda z: 1.0 - np.abs(z) ** 2) - np.pi / 2) <= 1e-13


def test_hemisphere_rule_height_moment():
    # frozen: integral of the height coordinate over the upper unit hemisphere is pi
    rule = hemisphere_rule(64, 32)
    assert np.all(rule.nodes[:, 2] > 0)
    assert np.allclose(np.sum(rule.nodes**2, axis=1), 1.0, atol=1e-14)
    assert abs(integrate(rule, lambda p: p[:, 2]) - np.pi) <= 1e-12


def _spherical_direct(f, n_theta=80, n_phi=160):
    """Independent oracle: latitude-longitude rule on the upper hemisphere."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.pi / 4 * (x + 1.0)
    wt = np.pi / 4 * w * np.sin(theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    pts = np.stack(
        [
            (np.sin(theta)[:, None] * np.cos(phi)[None, :]),
            (np.sin(theta)[:, None] * np.sin(phi)[None, :]),
            (np.cos(theta)[:, None] * np.ones(n_phi)[None, :]),
        ],
        axis=-1,
    ).reshape(-1, 3)
    W = (wt[:, None] * np.full(n_phi, 2 * np.pi / n_phi)[None, :]).ravel()
    return float(np.asarray(f(pts)) @ W)


def test_hemisphere_rule_matches_spherical_oracle_on_random_smooth():
    rng = np.random.default_rng(7)
    rule = hemisphere_rule(72, 144)
    for _ in range(20):
        a = rng.normal(size=3)
        b = rng.normal(size=3)
        c = rng.uniform(-1, 1)

        def f(p):
            return np.exp(0.7 * (p @ a)) + np.cos(p @ b + c)

        assert abs(integrate(rule, f) - _spherical_direct(f)) <= 1e-8


# ---------------------------------------------------------------------- gamma


def test_gamma_known_values():
    assert abs(gamma_fn(0.5) - math.sqrt(math.pi)) <= 5e-13 * math.sqrt(math.pi)
    assert abs(gamma_fn(1.0) - 1.0) <= 5e-13
    assert abs(gamma_fn(2.0) - 1.0) <= 5e-13
    assert abs(gamma_fn(5.0) - 24.0) <= 5e-13 * 24
    assert abs(gamma_fn(10.0) - 362880.0) <= 5e-13 * 362880
    # frozen reference values used by the constants elsewhere in the package
    assert abs(gamma_fn(0.25) - 3.6256099082219083) <= 5e-12 * 3.6256099082219083
    assert abs(gamma_fn(0.75) - 1.2254167024651776) <= 5e-12 * 1.2254167024651776


def test_gamma_recurrence():
    for x in np.arange(1, 51) * 0.1:
        lhs = gamma_fn(x + 1.0)
        rhs = x * gamma_fn(x)
        assert abs(lhs - rhs) <= 1e-11 * max(1.0, abs(rhs)), x


def test_gamma_matches_integral_oracle():
    for x in (1.5, 2.5, 4.2):
        val, _ = integrate_halfline(lambda t: t ** (x - 1.0) * np.exp(-t))
        assert abs(val - gamma_fn(x)) <= 1e-10 * gamma_fn(x)


def test_gamma_rejects_nonpositive():
    with pytest.raises(InvalidArgument):
        gamma_fn(0.0)
    with pytest.raises(InvalidArgument):
        gamma_fn(-1.5)


# ------------------------------------------------------------------- inversion


def test_invert_monotone_recovers_roots():
    rng = np.random.default_rng(11)
    for _ in range(10):
        a = rng.uniform(0.2, 2.0)
        b = rng.uniform(0.5, 2.0)
        c = rng.uniform(-1.0, 1.0)
        f = lambda x: a * x**3 + b * x + c
        x_star = rng.uniform(-1.9, 1.9)
        x_hat = invert_monotone(f, f(x_star), -2.0, 2.0)
        assert abs(x_hat - x_star) <= 1e-7


def test_invert_monotone_rejects_nonmonotone():
    with pytest.raises(PreconditionViolation):
        invert_monotone(lambda x: x * x, 0.5, -1.0, 1.0)


def test_invert_monotone_rejects_out_of_range():
    with pytest.raises(OutOfRange):
        invert_monotone(lambda x: x, 2.0, 0.0, 1.0)


# -------------------------------------------------------------------- adaptive


def test_adaptive_polynomial_is_exact():
    res = adaptive_integrate(lambda x: x**6, -1.0, 1.0)
    assert isinstance(res, IntegrationResult)
    v, e = res  # unpacks as a (value, error) pair
    assert abs(v - 2.0 / 7.0) <= 1e-13
    assert res.converged


def test_adaptive_integrable_endpoint_singularity():
    v, e = adaptive_integrate(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0, singular=(0.0,))
    assert abs(v - 2.0) <= 1e-8
    v, e = adaptive_integrate(np.log, 0.0, 1.0, singular=(0.0,))
    assert abs(v - (-1.0)) <= 1e-8


def test_adaptive_interior_singularity():
    v, _ = adaptive_integrate(
        lambda x: 1.0 / np.sqrt(np.abs(x - 0.3)), 0.0, 1.0, singular=(0.3,)
    )
    exact = 2.0 * (math.sqrt(0.3) + math.sqrt(0.7))
    assert abs(v - exact) <= 1e-7


def test_adaptive_raises_on_nonfinite_off_singular_set():
    def f(x):
        return np.where(x < 0.3, 1.0, np.nan)

    with pytest.raises(NumericalFailure):
        adaptive_integrate(f, 0.0, 1.0)


def test_adaptive_respects_tolerance_object():
    tol = Tolerance(abs_tol=1e-6, rel_tol=0.0, max_refinements=5)
    res = adaptive_integrate(lambda x: np.sin(3 * x) ** 2, 0.0, 2.0, tol=tol)
    exact = 1.0 - math.sin(12.0) / 12.0
    assert abs(res.value - exact) <= 1e-6


def test_tolerance_validation():
    with pytest.raises(InvalidArgument):
        Tolerance(abs_tol=0.0, rel_tol=0.0)
    with pytest.raises(InvalidArgument):
        Tolerance(abs_tol=-1e-3)


def test_line_integrals_by_tangent_substitution():
    v, _ = integrate_line(lambda x: 1.0 / (1.0 + x * x))
    assert abs(v - math.pi) <= 1e-10
    v, _ = integrate_line(lambda x: np.exp(-(x**2)))
    assert abs(v - math.sqrt(math.pi)) <= 1e-10
    v, _ = integrate_halfline(lambda x: np.exp(-x))
    assert abs(v - 1.0) <= 1e-10


def test_halfline_polar_kernel_identity():
    # frozen: int_0^inf rho (1 - 2 rho c + rho^2)^(-3/2) drho = 1/(1-c) for |c| < 1
    for c in (0.0, 0.3, -0.45, 0.8):
        v, _ = integrate_halfline(lambda r: r * (1.0 - 2.0 * r * c + r * r) ** -1.5)
        assert abs(v - 1.0 / (1.0 - c)) <= 1e-9 / (1.0 - c)
