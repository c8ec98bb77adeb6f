"""Tests for the closed-form certificates and their quadrature oracles."""

import json
import math

import numpy as np
import pytest

from halfharm.errors import DomainViolation, InvalidArgument
from halfharm.certificates import (
    A_closed,
    A_oracle,
    CertificateReport,
    F1_closed_or_quad,
    F2_certificate,
    F_closed,
    I_oracle,
    J_closed,
    J_oracle,
    M_closed,
    M_oracle,
    N_closed,
    N_oracle,
    P_closed,
    U_closed,
    U_oracle,
    V_closed,
    V_oracle,
    certificate_tables,
    delta_certificate,
    hardy_constant,
    polar_kernel_identity,
    ratint_closed,
    ratint_oracle,
    sphere_destabilization_margin,
    standard_certificates,
)
from halfharm.certificates import _f1_gauss

# Frozen oracle pins.  Each was computed by an independent quadrature route
# (escalating tensor disc rules, graded adaptive panels, or a 4096-node
# circle rule) and only then written down here; the library must keep
# reproducing them.
PIN_F_QUARTER = 0.7390245283466088  # disc oracle / pi at gamma = 0.5
PIN_I_SQUARED_HALF = 2.321714029076368
PIN_I_FIRST_HALF = 1.9669504165368212
PIN_J_07_06 = 0.13848067566014602
PIN_DELTA_THIRD = 0.9711169156049213
PIN_DELTA_ZERO = 1.345141721631552
PIN_DELTA_HALF = 0.7743601041
PIN_DELTA_09 = 0.2136381870
PIN_F1_01 = 0.408474898026
PIN_F1_05 = 0.065769693333
PIN_F1_10 = 0.019224372402
PIN_DEFICIT = 1.9310471438
PIN_SUBSTITUTION = 1.3500611219

# Gamma-function reference values at the quarter-integers, frozen from
# standard tables; their product must equal pi * sqrt(2) exactly (reflection).
GAMMA_QUARTER = 3.6256099082219083
GAMMA_THREE_QUARTER = 1.2254167024651776
PIN_HARDY = 8.0 * math.pi * (GAMMA_THREE_QUARTER / GAMMA_QUARTER) ** 2


@pytest.fixture(scope="module")
def battery():
    return standard_certificates()


@pytest.fixture(scope="module")
def tables():
    return certificate_tables()


# ---------------------------------------------------------------------------
# F and the disc integral


def test_log_disc_closed_form_at_zero():
    assert math.isclose(F_closed(0.0), 2.0 - 2.0 * math.log(2.0), rel_tol=1e-14)


def test_log_disc_closed_form_domain():
    for bad in (1.0, 1.5, -0.1, math.inf, math.nan):
        with pytest.raises(DomainViolation):
            F_closed(bad)


def test_log_disc_closed_form_increasing():
    grid = np.linspace(0.0, 0.95, 60)
    vals = [F_closed(t) for t in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_log_disc_closed_form_divergence():
    assert F_closed(1.0 - 1e-9) > F_closed(0.99) > F_closed(0.9)


def test_disc_oracle_matches_closed_form_on_grid():
    for gamma in np.linspace(0.0, 0.9, 10):
        closed = math.pi * F_closed(gamma * gamma)
        tol = 1e-6 if gamma > 0.85 else 1e-7
        assert abs(I_oracle(float(gamma)) - closed) <= tol


def test_disc_oracle_frozen_pin():
    assert abs(I_oracle(0.5) - PIN_I_SQUARED_HALF) <= 1e-12
    assert abs(math.pi * F_closed(0.25) - PIN_F_QUARTER * math.pi) <= 1e-12


def test_denominator_power_adjudication():
    closed = math.pi * F_closed(0.25)
    assert abs(I_oracle(0.5, squared=True) - closed) <= 1e-7
    first = I_oracle(0.5, squared=False)
    assert abs(first - PIN_I_FIRST_HALF) <= 1e-10
    assert abs(first - closed) > 0.1  # the first-power variant is decisively wrong


# ---------------------------------------------------------------------------
# angular moments and disc mass


def test_angular_moments_at_zero():
    assert math.isclose(M_closed(0.0), 2.0 * math.pi, rel_tol=1e-14)
    assert math.isclose(N_closed(0.0), math.pi, rel_tol=1e-14)


def test_angular_moments_match_oracles():
    for a in np.linspace(0.0, 0.9, 10):
        a = float(a)
        assert abs(M_closed(a) - M_oracle(a)) <= 1e-9 * max(1.0, M_closed(a))
        assert abs(N_closed(a) - N_oracle(a)) <= 1e-9 * max(1.0, N_closed(a))


def test_disc_mass_matches_oracle():
    assert math.isclose(A_closed(0.0), math.pi, rel_tol=1e-14)
    for gamma in np.linspace(0.0, 0.9, 10):
        gamma = float(gamma)
        assert abs(A_closed(gamma) - A_oracle(gamma)) <= 1e-7 * max(1.0, A_closed(gamma))


# ---------------------------------------------------------------------------
# radial building blocks


def test_radial_log_integrals_at_zero():
    assert math.isclose(V_closed(0.0), 0.5 * math.log(2.0) - 0.25, rel_tol=1e-14)


def test_radial_log_integrals_match_oracles():
    for t in np.linspace(0.0, 0.9, 10):
        t = float(t)
        assert abs(V_closed(t) - V_oracle(t)) <= 1e-9
        assert abs(U_closed(t) - U_oracle(t)) <= 1e-9 * max(1.0, abs(U_closed(t)))


def test_partial_fraction_identity():
    for t in np.linspace(0.0, 0.95, 20):
        t = float(t)
        lhs = P_closed(t) + 1.0 / (4.0 * (1.0 + t))
        rhs = (t * t + 11.0 * t - 2.0) / (4.0 * (1.0 + t) ** 3)
        assert abs(lhs - rhs) <= 1e-12


def test_radial_blocks_compose_to_disc_closed_form():
    # pi * F(t) must equal A(sqrt(t)) - 4*pi*(2U(t) - V(t)): the disc integral
    # splits into the kernel mass minus the weighted radial remainder.
    for t in np.linspace(0.0, 0.9, 10):
        t = float(t)
        lhs = math.pi * F_closed(t)
        rhs = A_closed(math.sqrt(t)) - 4.0 * math.pi * (2.0 * U_closed(t) - V_closed(t))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


# ---------------------------------------------------------------------------
# rational line integral


def test_rational_line_integral_exact_points():
    assert math.isclose(ratint_closed(1.0, 2.0), 1.0, rel_tol=1e-14)
    assert math.isclose(ratint_closed(1.0, 10.0), 2.0, rel_tol=1e-14)
    assert math.isclose(ratint_closed(2.0, 1.0), 41.0 / 144.0, rel_tol=1e-14)


def test_rational_line_integral_matches_oracle():
    for A in np.linspace(0.5, 3.0, 5):
        for B in np.linspace(0.5, 8.0, 5):
            closed = ratint_closed(float(A), float(B))
            assert abs(closed - ratint_oracle(float(A), float(B))) <= 1e-9 * max(1.0, closed)


def test_rational_line_integral_domain():
    for bad in (0.0, -1.0):
        with pytest.raises(DomainViolation):
            ratint_closed(bad, 1.0)
        with pytest.raises(DomainViolation):
            ratint_closed(1.0, bad)


# ---------------------------------------------------------------------------
# circle average of the transplanted kernel


def test_kernel_average_special_values():
    for a in (0.1, 0.5, 1.0):
        assert math.isclose(J_closed(a, 0.0), 1.0 / (1.0 + a) ** 4, rel_tol=1e-13)
    # at a = 1 the closed form collapses to (lam^4 + 1)/16
    for lam in (0.0, 0.3, 0.7, 1.0):
        assert math.isclose(J_closed(1.0, lam), (lam**4 + 1.0) / 16.0, rel_tol=1e-13)


def test_kernel_average_matches_printed_polynomial():
    # the stable rearrangement must agree with the literal polynomial form
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = float(rng.uniform(0.05, 1.0))
        lam = float(rng.uniform(0.0, 0.95))
        t = (1.0 - a) / (1.0 + a)
        x = lam * lam
        num = (2.0 * t * t + 1.0) * t * t * x**3 - (6.0 * t * t - 1.0) * x * x + t * t * x + 1.0
        printed = ((1.0 + t) ** 4 / 16.0) * num / (1.0 - x * t * t) ** 3
        assert abs(J_closed(a, lam) - printed) <= 1e-12 * max(1.0, printed)


def test_kernel_average_increasing_in_lam():
    for a in (0.2, 0.5, 0.8, 1.0):
        vals = [J_closed(a, lam) for lam in np.linspace(0.0, 1.0, 50)]
        assert all(b > a_ for a_, b in zip(vals, vals[1:]))


def test_kernel_average_frozen_pin():
    assert abs(J_closed(0.7, 0.6) - PIN_J_07_06) <= 1e-14


def test_kernel_average_domain():
    with pytest.raises(DomainViolation):
        J_closed(0.0, 0.5)
    with pytest.raises(DomainViolation):
        J_closed(1.2, 0.5)
    with pytest.raises(DomainViolation):
        J_closed(0.5, -0.1)
    with pytest.raises(DomainViolation):
        J_closed(0.5, 1.1)


def test_kernel_oracle_matches_closed_form():
    assert abs(J_oracle(0.5, 0.0) - 1.0 / 1.5**4) <= 1e-12
    assert abs(J_oracle(0.7, 0.6) - J_closed(0.7, 0.6)) <= 1e-8
    for a in np.linspace(0.1, 1.0, 10):
        for lam in np.linspace(0.0, 0.9, 10):
            a, lam = float(a), float(lam)
            assert abs(J_oracle(a, lam) - J_closed(a, lam)) <= 1e-8


def test_kernel_oracle_on_rim():
    # lam = 1 puts a kernel pole on a quadrature node; the half-step shift
    # must keep the rule convergent there.
    for a in (0.1, 0.3, 0.5, 1.0):
        assert abs(J_oracle(a, 1.0) - J_closed(a, 1.0)) <= 1e-10


def test_kernel_oracle_derivative_positive():
    h = 1e-4
    for lam in np.linspace(0.05, 0.95, 100):
        lam = float(lam)
        slope = (J_oracle(0.5, lam + h) - J_oracle(0.5, lam - h)) / (2.0 * h)
        assert slope > 0.0


# ---------------------------------------------------------------------------
# zero-radius certificate


def test_delta_certificate_empty_interval():
    assert delta_certificate(1.0) == 0.0


def test_delta_certificate_at_one_third():
    value = delta_certificate(1.0 / 3.0)
    assert 0.966 <= value <= 0.976
    assert value < 1.0
    assert abs(value - PIN_DELTA_THIRD) <= 1e-6


def test_delta_certificate_frozen_grid():
    assert abs(delta_certificate(0.0) - PIN_DELTA_ZERO) <= 1e-6
    assert abs(delta_certificate(0.5) - PIN_DELTA_HALF) <= 1e-6
    assert abs(delta_certificate(0.9) - PIN_DELTA_09) <= 1e-6


def test_delta_certificate_strictly_decreasing():
    grid = np.linspace(0.0, 1.0, 12)
    vals = [delta_certificate(float(d)) for d in grid]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_delta_certificate_domain():
    for bad in (-0.1, 1.1, math.nan):
        with pytest.raises(DomainViolation):
            delta_certificate(bad)


# ---------------------------------------------------------------------------
# competitor-energy profile


def test_unwound_profile_frozen_pins():
    assert abs(F1_closed_or_quad(0.1) - PIN_F1_01) <= 1e-9
    assert abs(F1_closed_or_quad(0.5) - PIN_F1_05) <= 1e-9
    assert abs(F1_closed_or_quad(1.0) - PIN_F1_10) <= 1e-9


def test_unwound_profile_decreasing():
    vals = [F1_closed_or_quad(float(a)) for a in np.linspace(0.1, 1.0, 10)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_unwound_profile_cross_rule():
    for a in (0.1, 0.4, 0.7, 1.0):
        assert abs(F1_closed_or_quad(a) - _f1_gauss(a)) <= 1e-9


def test_unwound_profile_domain():
    for bad in (0.0, -0.5, 1.5):
        with pytest.raises(DomainViolation):
            F1_closed_or_quad(bad)


def test_energy_deficit_certificate():
    report = F2_certificate()
    assert report.verdict == "pass"
    assert abs(report.closed_value - PIN_DEFICIT) <= 1e-6
    assert 1.90 <= report.closed_value <= 1.96
    assert report.closed_value < 2.0
    assert "below 2" in report.notes
    assert "substitution" in report.notes
    assert "concavity" in report.notes


def test_substitution_identity_pin(battery):
    by_name = {r.name: r for r in battery}
    report = by_name["substitution-identity"]
    assert report.verdict == "pass"
    assert abs(report.closed_value - PIN_SUBSTITUTION) <= 1e-6
    assert report.abs_diff <= 1e-4


# ---------------------------------------------------------------------------
# Hardy constant and destabilization margin


def test_hardy_constant_value():
    value = hardy_constant()
    assert abs(value - PIN_HARDY) <= 1e-12
    assert abs(value - 2.871) <= 1e-3
    assert 0.0 < value < 4.0 * math.pi
    assert abs(value / (4.0 * math.pi) - 0.2284732905222318) <= 1e-12


def test_gamma_reflection_product():
    assert math.isclose(GAMMA_QUARTER * GAMMA_THREE_QUARTER, math.pi * math.sqrt(2.0), rel_tol=1e-15)


def test_destabilization_margin_values():
    assert abs(sphere_destabilization_margin(1) - (4.0 * math.pi - PIN_HARDY)) <= 1e-12
    for d in range(1, 7):
        assert sphere_destabilization_margin(d) > 0.0
    # consecutive margins differ by exactly 4*pi
    for d in range(1, 5):
        gap = sphere_destabilization_margin(d + 1) - sphere_destabilization_margin(d)
        assert math.isclose(gap, 4.0 * math.pi, rel_tol=1e-12)


def test_destabilization_margin_domain():
    for bad in (0, -3, 1.5, "2", True):
        with pytest.raises(DomainViolation):
            sphere_destabilization_margin(bad)


# ---------------------------------------------------------------------------
# polar resolvent identity


def test_polar_kernel_identity_values():
    for c, expected in ((0.0, 1.0), (0.5, 2.0), (-0.9, 1.0 / 1.9)):
        report = polar_kernel_identity(c)
        assert report.verdict == "pass"
        assert math.isclose(report.closed_value, expected, rel_tol=1e-14)
        assert report.abs_diff <= 1e-8


def test_polar_kernel_identity_domain():
    for bad in (1.0, -1.0, 2.0, math.nan):
        with pytest.raises(DomainViolation):
            polar_kernel_identity(bad)


# ---------------------------------------------------------------------------
# report type invariants


def test_report_verdict_iff_tolerance():
    good = CertificateReport.from_values("x", 1.0, 1.0 + 1e-9, 1e-8)
    assert good.verdict == "pass"
    bad = CertificateReport.from_values("x", 1.0, 1.1, 1e-8)
    assert bad.verdict == "fail"
    assert bad.notes  # failing reports always explain themselves


def test_report_rejects_inconsistent_fields():
    with pytest.raises(InvalidArgument):
        CertificateReport("x", 1.0, 1.0, 0.5, 1e-8, "pass")  # wrong abs_diff
    with pytest.raises(InvalidArgument):
        CertificateReport("x", 1.0, 2.0, 1.0, 1e-8, "pass", "n")  # wrong verdict
    with pytest.raises(InvalidArgument):
        CertificateReport("x", 1.0, 2.0, 1.0, 1e-8, "fail")  # fail without notes
    with pytest.raises(InvalidArgument):
        CertificateReport("", 1.0, 1.0, 0.0, 1e-8, "pass")  # empty name
    with pytest.raises(InvalidArgument):
        CertificateReport.from_values("x", math.nan, 1.0, 1e-8)


def test_report_serializes_to_json():
    report = CertificateReport.from_values("x", 1.0, 1.0, 1e-8, "fine")
    blob = json.dumps(report.to_dict())
    back = json.loads(blob)
    assert back["name"] == "x"
    assert back["verdict"] == "pass"
    assert set(back) == {
        "name", "closed_value", "oracle_value", "abs_diff", "tolerance", "verdict", "notes",
    }


def test_report_is_frozen():
    report = CertificateReport.from_values("x", 1.0, 1.0, 1e-8)
    with pytest.raises(AttributeError):
        report.verdict = "fail"


# ---------------------------------------------------------------------------
# the standard battery


def test_battery_all_pass(battery):
    assert len(battery) >= 15
    for report in battery:
        assert report.verdict == "pass", f"{report.name}: {report.notes}"


def test_battery_contains_decisive_verdicts(battery):
    names = [r.name for r in battery]
    assert "zero-radius-certificate" in names
    assert "higher-degree-energy-deficit" in names
    assert any(n.startswith("destabilization-margin") for n in names)
    assert "quadratic-power-adjudication" in names
    assert len(names) == len(set(names))


def test_battery_adjudication_notes(battery):
    by_name = {r.name: r for r in battery}
    notes = by_name["quadratic-power-adjudication"].notes
    assert "first-power" in notes
    assert "canonical" in notes


def test_battery_deterministic(battery):
    again = standard_certificates()
    assert again == battery


def test_battery_threaded_matches_serial(battery, monkeypatch):
    monkeypatch.setenv("HALFHARM_THREADS", "4")
    threaded = standard_certificates()
    assert threaded == battery


def test_tables_families_and_grids(tables):
    expected = {
        "disc_integral": 10,
        "disc_kernel_mass": 10,
        "angular_moment_flat": 10,
        "angular_moment_cos2": 10,
        "radial_log_first_power": 10,
        "radial_log_cubed": 10,
        "partial_fraction_identity": 20,
        "rational_line_integral": 100,
        "mobius_kernel_average": 100,
        "mobius_kernel_rim": 4,
        "unwound_kernel_profile": 10,
        "radial_resolvent_identity": 10,
    }
    assert set(tables) == set(expected)
    for family, count in expected.items():
        rows = tables[family]
        assert len(rows) == count, family
        for arg, closed, oracle, diff in rows:
            assert isinstance(arg, str) and arg
            assert math.isfinite(closed) and math.isfinite(oracle)
            assert math.isclose(diff, abs(closed - oracle), rel_tol=1e-12, abs_tol=1e-300)


def test_tables_diffs_within_report_tolerances(tables):
    # every family's worst row must clear the tolerance its battery report uses
    tolerances = {
        "disc_integral": 1e-7,
        "disc_kernel_mass": 1e-7,
        "angular_moment_flat": 1e-9,
        "angular_moment_cos2": 1e-9,
        "radial_log_first_power": 1e-9,
        "radial_log_cubed": 1e-9,
        "partial_fraction_identity": 1e-12,
        "rational_line_integral": 1e-9,
        "mobius_kernel_average": 1e-8,
        "mobius_kernel_rim": 1e-8,
        "unwound_kernel_profile": 1e-9,
        "radial_resolvent_identity": 1e-8,
    }
    for family, tol in tolerances.items():
        worst = max(row[3] for row in tables[family])
        assert worst <= tol, family
