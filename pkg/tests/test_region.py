import random
from fractions import Fraction as F

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from thinorbit import region as R
from thinorbit import roots
from thinorbit.errors import ParameterError

# --- exact root tools -------------------------------------------------------------------


@given(st.lists(st.integers(-50, 50), min_size=2, max_size=6))
@settings(max_examples=150, deadline=None)
def test_real_roots_match_sympy(coeffs):
    if coeffs[-1] == 0:
        return
    x = sp.Symbol("x")
    p = sp.Poly(list(reversed(coeffs)), x)
    expected = sorted(float(r) for r in sp.real_roots(p))
    expected = sorted(set(round(r, 9) for r in expected))
    got = [round(r, 9) for r in roots.real_roots(coeffs)]
    assert got == pytest.approx(expected, abs=1e-8)


def test_sturm_counts():
    p = [-6, 11, -6, 1]  # (x-1)(x-2)(x-3)
    assert roots.count_roots(p, F(0), F(10)) == 3
    assert roots.count_roots(p, F(1), F(2)) == 1  # (1, 2]
    assert roots.real_roots(p) == pytest.approx([1, 2, 3])
    assert roots.real_roots([1, -2, 1]) == pytest.approx([1])  # double root


def test_bisect_requires_sign_change():
    with pytest.raises(ValueError):
        roots.bisect([1, 0, 1], F(-1), F(1), 1e-9)


# --- critical polynomials ----------------------------------------------------------------


def test_cubic_value_at_one():
    assert roots.evaluate(R.DELTA_CUBIC, 1) == 1
    assert roots.evaluate(R.SIGMA_CUBIC, 0) == 4995


def test_minimal_delta():
    d = R.minimal_delta(1e-12)
    assert abs(d - 0.9999493550) < 1e-9
    assert max(np.roots(list(reversed(R.DELTA_CUBIC))).real) == pytest.approx(d, abs=1e-9)


def test_minimal_delta_bracket_invariance():
    a = R.minimal_delta(1e-13)
    assert R.minimal_delta(1e-13, bracket=(F(99, 100), F(1))) == pytest.approx(a, abs=1e-12)
    assert R.minimal_delta(1e-13, bracket=("0.99994", "0.99996")) == pytest.approx(a, abs=1e-12)
    with pytest.raises(ParameterError):
        R.minimal_delta(1e-12, bracket=(F(0), F(1, 2)))
    with pytest.raises(ParameterError):
        R.minimal_delta(0)


def test_critical_sigma():
    s = R.critical_sigma(1e-12)
    assert abs(s - 0.011550825843) < 1e-9
    real = [r.real for r in np.roots(list(reversed(R.SIGMA_CUBIC))) if abs(r.imag) < 1e-12]
    assert min(real, key=abs) == pytest.approx(s, abs=1e-9)


def test_derived_polynomials():
    d = R.derive_critical_polynomial()
    assert d.degree == 3 and d.matches_published
    assert R.proportional(d.coefficients, (1020, -8897, -5010, 12888))
    assert max(roots.real_roots(d.coefficients)) == pytest.approx(R.minimal_delta(), abs=1e-9)
    s = R.derive_sigma_polynomial()
    assert s.matches_published


def test_corner_condition_vanishes_at_delta_one():
    d, s, tight, _ = R._symbolic_system()
    assert sp.simplify(tight.subs(d, 1) + sp.Rational(1, 3) * s) == 0


# --- membership and cover ----------------------------------------------------------------


def test_membership_examples():
    assert R.region_membership(1, F(1, 100), F(3, 10), F(3, 10)) == "L86"
    label = R.region_membership(1, F(1, 100), F(1, 1000), F(1, 1000))
    assert label in R.REGIONS  # Major fails exactly (0.034 > 1/300), L82 catches it
    assert label == "L82"
    sys = R.region_system(F(9, 10), F(1, 10))
    s86a = [c for c in sys.regions["L86"] if c.name == "S86a"][0]
    assert not s86a.w > 0
    for s in (F(1, 100), F(1, 5)):
        for a in (0, F(1, 4), F(1, 2)):
            assert R.region_membership(F(9, 10), s, a, a) != "L86"


def test_membership_errors():
    with pytest.raises(ParameterError):
        R.region_membership(F(4, 5), F(1, 100), 0, 0)
    with pytest.raises(ParameterError):
        R.region_membership(1, F(1, 4), 0, 0)
    with pytest.raises(ParameterError):
        R.region_membership(1, F(1, 100), F(3, 5), 0)


def test_strict_boundaries_are_uncovered():
    # constraints are strict, so a point on a boundary line is not inside
    sys = R.region_system(1, F(1, 100))
    c = sys.regions["L82"][0]
    assert not c.holds(F(0), F(0))


def test_cover_examples():
    assert R.full_cover(F("0.99995"), F("0.01155")).covered
    res = R.full_cover(F("0.999"), F("0.01"))
    assert not res.covered and res.witness is not None
    assert R.region_membership(F("0.999"), F("0.01"), *res.witness) == "Uncovered"
    res = R.full_cover(1, F("0.012"))
    assert not res.covered
    assert R.region_membership(1, F("0.012"), *res.witness) == "Uncovered"


def _near_boundary(system, point, h):
    a, k = point
    for c in system.constraints():
        if c.is_constant:
            continue
        dist = abs(c.slack(a, k)) / (abs(c.u) + abs(c.v))
        if dist <= 2 * h:
            return True
    return min(a, k, F(1, 2) - a, F(1, 2) - k) <= 2 * h


@pytest.mark.parametrize("delta,sigma", [
    ("0.99995", "0.01155"), ("0.999", "0.01"), ("1", "0.012"), ("1", "0.01"),
    ("0.99996", "0.0114"), ("0.99997", "0.0117"),
])
def test_exact_and_grid_agree(delta, sigma):
    d, s = F(delta), F(sigma)
    h = F(1, 10**4)
    exact = R.full_cover(d, s)
    grid = R.full_cover(d, s, "grid", h)
    if exact.covered != grid.covered:
        assert not exact.covered and _near_boundary(R.region_system(d, s), exact.witness, h)
    if not grid.covered:
        assert R.region_membership(d, s, *grid.witness) == "Uncovered"


def test_monotone_in_delta():
    rng = random.Random(7)
    for _ in range(400):
        d = F(rng.randint(833400, 1000000), 10**6)
        d2 = min(F(1), d + F(rng.randint(1, 5000), 10**6))
        s = F(rng.randint(1, 249999), 10**6)
        a, k = F(rng.randint(0, 500), 1000), F(rng.randint(0, 500), 1000)
        lo, hi = R.region_system(d, s), R.region_system(d2, s)
        for name in R.REGIONS:
            for c1, c2 in zip(lo.regions[name], hi.regions[name]):
                if c1.holds(a, k):
                    assert c2.holds(a, k), (name, c1.name, d, d2, s, a, k)


def test_feasibility_scan_brackets_the_root():
    deltas = [F(999940 + i, 10**6) for i in range(21)]
    sigmas = [F(11000 + 5 * j, 10**6) for j in range(241)]
    found = R.scan_minimal_delta(deltas, sigmas)
    root = R.minimal_delta()
    assert root <= found <= root + 1e-6


def test_below_root_nothing_covers():
    d = F(R.minimal_delta()) - F(1, 10**7)
    for j in range(1, 250):
        assert not R.full_cover(d, F(j, 1000)).covered
    assert not any(R.full_cover(d, F(11500 + i, 10**6)).covered for i in range(0, 110, 2))


def test_region_report_and_figures():
    rep = R.region_report(F("0.99996"), F("0.0115"))
    assert rep["covered"] and set(rep["region_areas"]) == set(R.REGIONS)
    assert all(v >= 0 for v in rep["region_areas"].values())
    assert "S86b" in rep["active_constraints"]["L86"]
    bad = R.region_report(F("0.999"), F("0.01"))
    assert "witness" in bad
    for text in (R.feasibility_grid_data(steps=(4, 4)), R.cubic_curve_data(steps=10),
                 R.polygon_data(F("0.99996"), F("0.0115"))):
        assert text.splitlines()[0] == "x,y,region_label"


def test_polygon_area_of_square():
    sq = [(F(0), F(0)), (F(1, 2), F(0)), (F(1, 2), F(1, 2)), (F(0), F(1, 2))]
    assert R.polygon_area(sq) == F(1, 4)
