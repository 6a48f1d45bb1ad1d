import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermion_wn.analyzer import (
    CriterionSpec,
    closed_form_sum_massive1d,
    criterion_partial_sum,
    delta_squared,
    diagnose,
    frobenius_squared,
    growth_exponent,
    massive1d_gap,
    massive1d_n_alpha,
    massless1d_hs_bound,
    scenario_report,
    smallest_convergent_exponent,
    sublattice_partial_sum,
)
from fermion_wn.oneparticle import GaugeFunction, Scenario, build_model, gauge_block

from oracles import MASSIVE1D_HS_QUADRATURE, MASSLESS1D_HS

COS1 = GaugeFunction.cosine(1)
COS3 = GaugeFunction.cosine(3)
MIXED1 = COS1 + GaugeFunction.cosine(1, frequency=2, amplitude=0.5)


def _massive(cutoff):
    return build_model(Scenario(1, 2.0, mode_cutoff=cutoff))


def test_criterion_spec():
    assert CriterionSpec("hilbert_schmidt", 3.0).p == 0.0
    assert CriterionSpec("gen_functional", 0.5).weight_power == -1.0
    assert CriterionSpec("test_functional", 0.5).weight_power == 1.0
    with pytest.raises(ValueError):
        CriterionSpec("gen_functional", 0.0)
    with pytest.raises(ValueError):
        CriterionSpec("other", 1.0)


@pytest.mark.parametrize("p, signed", [(0.0, False), (0.5, True), (1.0, False)])
def test_zero_gauge_sum(p, signed):
    assert criterion_partial_sum(_massive(16), GaugeFunction.zero(1), p, signed) == 0.0


def test_hs_sum_matches_frozen_quadrature():
    for cutoff, value in MASSIVE1D_HS_QUADRATURE.items():
        assert criterion_partial_sum(_massive(cutoff), COS1, 0.0, False) == pytest.approx(value, rel=1e-13)


def test_hs_relative_increment_small():
    a = criterion_partial_sum(_massive(64), COS1, 0.0, False)
    b = criterion_partial_sum(_massive(128), COS1, 0.0, False)
    assert (b - a) / b < 1e-3


def test_test_functional_p1_grows_linearly():
    sums = {c: criterion_partial_sum(_massive(c), COS1, 1.0, False) for c in (64, 128, 256, 512)}
    rep = diagnose(sums)
    assert rep.verdict == "divergent"
    assert abs(rep.growth_exponent - 1.0) < 0.2


@pytest.mark.parametrize("key", ["massive1d", "massless1d", "massive3d", "massless3d"])
def test_frobenius_route(key):
    sc = {"massive1d": Scenario(1, 2.0, mode_cutoff=40), "massless1d": Scenario(1, 0.0, mode_cutoff=40),
          "massive3d": Scenario(3, 2.0, mode_cutoff=4), "massless3d": Scenario(3, 0.0, mode_cutoff=4)}[key]
    model = build_model(sc)
    gauge = COS1 if sc.torus_dim == 1 else COS3
    total = criterion_partial_sum(model, gauge, 0.0, False)
    assert abs(total - frobenius_squared(model, gauge)) <= 1e-12 * max(1.0, total)


@pytest.mark.parametrize("p", [0.0, 0.5, 1.0])
@pytest.mark.parametrize("gauge", [COS1, MIXED1], ids=["cos", "cos_plus_cos2"])
def test_closed_form_exact_range_equals_matrix(p, gauge):
    for cutoff in (16, 32):
        model = _massive(cutoff)
        mat = criterion_partial_sum(model, gauge, p / 2, False)  # lambda^(2w) = E^(w)
        closed = closed_form_sum_massive1d(gauge, 2.0, p / 2, cutoff, exact_range=True)
        assert closed == pytest.approx(mat, rel=1e-12)


def test_closed_form_within_boundary_columns():
    for cutoff in (32, 64, 128):
        model = _massive(cutoff)
        mat = criterion_partial_sum(model, COS1, 0.0, False)
        block = gauge_block(model, COS1).toarray()
        edge = np.abs(model.momenta[:, 0]) == cutoff
        boundary = float((np.abs(block[:, edge]) ** 2).sum())
        assert abs(closed_form_sum_massive1d(COS1, 2.0, 0.0, cutoff) - mat) <= boundary


def test_closed_form_doubled_prefactor_is_twice_matrix():
    # the rearranged sum with its leading factor 2 counts each internal label twice
    mat = criterion_partial_sum(_massive(32), COS1, 0.0, False)
    doubled = closed_form_sum_massive1d(COS1, 2.0, 0.0, 32, prefactor=2.0, exact_range=True)
    assert doubled == pytest.approx(2 * mat, rel=1e-13)


def test_closed_form_diagonal_in_frequency():
    only_two = GaugeFunction.cosine(1, frequency=2)
    assert closed_form_sum_massive1d(GaugeFunction.zero(1), 2.0, 0.0, 8) == 0.0
    combined = closed_form_sum_massive1d(COS1 + only_two, 2.0, 0.0, 20)
    split = closed_form_sum_massive1d(COS1, 2.0, 0.0, 20) + closed_form_sum_massive1d(only_two, 2.0, 0.0, 20)
    assert combined == pytest.approx(split, rel=1e-14)


def test_closed_form_rejects_other_scenarios():
    with pytest.raises(ValueError):
        closed_form_sum_massive1d(COS3, 2.0, 0.0, 4)
    with pytest.raises(ValueError):
        closed_form_sum_massive1d(COS1, 0.0, 0.0, 4)


@given(st.integers(1, 400).flatmap(lambda a: st.tuples(st.just(a), st.sampled_from([-1, 1]))),
       st.integers(-5, 5), st.floats(0.5, 20))
def test_gap_identity_and_bounds(alpha_sign, gamma, mass):
    a = alpha_sign[0] * alpha_sign[1]
    gap = float(massive1d_gap(a, gamma, mass))
    n_alpha = float(massive1d_n_alpha(a, gamma, mass))
    assert gap == pytest.approx(mass ** 2 * gamma ** 2 / (a ** 2 * n_alpha), rel=1e-6, abs=1e-14 * (a * a + mass * mass))
    if abs(a) >= max(abs(gamma) + 1, mass):
        assert 2 / (abs(gamma) + 1) <= n_alpha < 7


def test_large_mass_tail_scaling():
    # bracket = m^2 g^2 / (N a^2) with 1 <= N < 7 at g = 1, so terms decay like a^-2
    a = np.arange(50, 400, dtype=float)
    ratio = massive1d_gap(a, 1, 5.0) * a ** 2 / 25.0
    assert np.all(ratio <= 1 + 1e-9) and np.all(ratio > 1 / 7)


# diagnosis -------------------------------------------------------------------


def test_diagnose_geometric_series():
    sums = {1: 1.0, 2: 1.5, 4: 1.75, 8: 1.875}
    assert diagnose(sums, rel_tol=0.2).verdict == "convergent"
    assert diagnose(sums).verdict != "divergent"


def test_diagnose_linear():
    rep = diagnose({c: 3.0 * c for c in (64, 128, 256, 512, 1024)})
    assert rep.verdict == "divergent"
    assert rep.growth_exponent == pytest.approx(1.0, abs=1e-12)


def test_diagnose_harmonic():
    sums = {c: sum(1 / k for k in range(1, c + 1)) for c in (64, 128, 256, 512, 1024)}
    rep = diagnose(sums)
    assert rep.verdict == "divergent"
    assert abs(rep.growth_exponent) < 0.05


def test_diagnose_constant_and_errors():
    assert diagnose({1: 2.0, 2: 2.0, 4: 2.0, 8: 2.0}).verdict == "convergent"
    assert math.isinf(growth_exponent([1, 2, 4, 8], [2.0] * 4))
    with pytest.raises(ValueError):
        diagnose({1: 1.0, 2: 0.5, 4: 0.6, 8: 0.7})
    with pytest.raises(ValueError):
        diagnose({1: 1.0, 2: 2.0, 4: 3.0})
    with pytest.raises(ValueError):
        diagnose([(2, 1.0), (1, 2.0), (4, 3.0), (8, 4.0)])


@given(st.floats(0.3, 3.0), st.floats(0.1, 10))
def test_power_law_exponent_recovered(k, scale):
    ladder = (64, 128, 256, 512, 1024)
    rep = diagnose({c: scale * c ** k for c in ladder})
    assert rep.growth_exponent == pytest.approx(k, abs=1e-9)
    assert rep.verdict == "divergent"


def test_sums_monotone_in_p():
    model = _massive(32)
    values = [criterion_partial_sum(model, COS1, p, False) for p in (0.0, 0.25, 0.5, 1.0)]
    assert values == sorted(values)


# nuclearity ----------------------------------------------------------------------


def test_delta_squared_circle():
    ladder = (64, 128, 256, 512, 1024)
    sc = Scenario(1, 2.0)
    assert delta_squared(sc, 2.0, ladder).verdict == "convergent"
    assert delta_squared(sc, 0.25, ladder).verdict == "divergent"
    assert delta_squared(sc, 0.5, ladder).verdict == "divergent"
    one = delta_squared(sc, 1.0, ladder)
    assert one.verdict == "inconclusive"  # the 1/L tail is too slow for 1e-4 at L = 1024
    assert delta_squared(sc, 1.0, ladder, rel_tol=1e-2).verdict == "convergent"
    assert one.growth_exponent == pytest.approx(-1.0, abs=0.05)
    with pytest.raises(ValueError):
        delta_squared(sc, 0.0, ladder)


def test_delta_squared_threshold_shifts_on_three_torus():
    # shell counting: 3-torus multiplicity ~ L^2 per shell, so exponent 1 no longer converges
    ladder = (4, 6, 8, 12, 16)
    rep = delta_squared(Scenario(3, 2.0), 1.0, ladder)
    assert rep.verdict == "divergent"
    assert rep.growth_exponent == pytest.approx(1.0, abs=0.2)
    grid = (0.25, 0.5, 1.0, 2.0, 3.0)
    one_dim = smallest_convergent_exponent(Scenario(1, 2.0), grid, (64, 128, 256, 512, 1024), rel_tol=1e-2)
    three_dim = smallest_convergent_exponent(Scenario(3, 2.0), grid, ladder, rel_tol=1e-2)
    assert one_dim == 1.0 and three_dim > one_dim


# sublattices and scenario reports ---------------------------------------------------


def test_sublattice_requires_three_torus():
    with pytest.raises(ValueError):
        sublattice_partial_sum(_massive(4), COS1, "iota_fixed_line")


def test_massive3d_line_sum_equals_circle_hs():
    for cutoff in (4, 8):
        model3 = build_model(Scenario(3, 2.0, mode_cutoff=cutoff))
        line = sublattice_partial_sum(model3, COS3, "iota_fixed_line")
        assert line == pytest.approx(criterion_partial_sum(_massive(cutoff), COS1, 0.0, False), rel=1e-13)


@pytest.fixture(scope="module")
def massive1d_report():
    return scenario_report(Scenario(1, 2.0), COS1)


def test_massive1d_report(massive1d_report):
    rep = massive1d_report
    assert rep.hilbert_schmidt.verdict == "convergent"
    for p in (0.75, 1.0):
        r = rep.test_functional[p]
        assert r.verdict == "divergent"
        assert abs(r.growth_exponent - (4 * p - 3)) <= 0.2
    assert rep.verdicts == {"implementable_as_Gamma_to_dual": True, "as_test_to_dual": True,
                            "as_test_to_test": False}
    assert len(rep.csv_rows()) == 3 * len(rep.p_grid) * len(rep.ladder)


def test_massive1d_half_exponent(massive1d_report):
    r = massive1d_report.test_functional[0.5]
    assert r.growth_exponent == pytest.approx(-1.0, abs=0.1)
    assert r.verdict == "inconclusive"
    relaxed = diagnose(r.partial_sums, rel_tol=1e-2)
    assert relaxed.verdict == "convergent"


def test_massless1d_report():
    rep = scenario_report(Scenario(1, 0.0), COS1)
    reports = [rep.hilbert_schmidt, *rep.gen_functional.values(), *rep.test_functional.values()]
    assert all(r.verdict == "convergent" for r in reports)
    assert all(v == pytest.approx(MASSLESS1D_HS, abs=1e-14) for v in rep.hilbert_schmidt.partial_sums.values())


def test_massless1d_bound_with_quarter_constant():
    # the quoted quarter constant sits below the exact value 1 of these sums
    rep = scenario_report(Scenario(1, 0.0), COS1, p_grid=(1.0,))
    for cutoff, value in rep.hilbert_schmidt.partial_sums.items():
        assert value <= massless1d_hs_bound(COS1, cutoff)


def test_massless1d_bound_with_constant_two():
    rep = scenario_report(Scenario(1, 0.0), MIXED1, p_grid=(1.0,))
    for cutoff, value in rep.hilbert_schmidt.partial_sums.items():
        assert value <= massless1d_hs_bound(MIXED1, cutoff, constant=2.0)


def test_parallel_report_identical():
    a = scenario_report(Scenario(3, 0.0), COS3, p_grid=(1.0,), ladder=(2, 3, 4, 5))
    b = scenario_report(Scenario(3, 0.0), COS3, p_grid=(1.0,), ladder=(2, 3, 4, 5), workers=2)
    assert a.to_dict() == b.to_dict()


def test_report_rejects_nonpositive_p():
    with pytest.raises(ValueError):
        scenario_report(Scenario(1, 2.0), COS1, p_grid=(0.0,), ladder=(4, 8, 16, 32))


def test_three_torus_reports():
    massive = scenario_report(Scenario(3, 2.0), COS3, p_grid=(1.0,))
    assert massive.hilbert_schmidt.verdict == "divergent"
    assert massive.sublattices["iota_antifixed_plane"].verdict == "divergent"
    # the fixed line carries exactly the circle's convergent sum
    assert massive.sublattices["iota_fixed_line"].verdict != "divergent"
    massless = scenario_report(Scenario(3, 0.0), COS3, p_grid=(1.0,))
    assert massless.hilbert_schmidt.verdict == "divergent"
    plane = massless.sublattices["iota_antifixed_plane"]
    assert plane.verdict == "divergent" and abs(plane.growth_exponent - 2) < 0.2
