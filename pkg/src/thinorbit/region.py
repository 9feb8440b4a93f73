"""Exact feasibility of the (alpha, kappa) cover and the critical exponents.

Every window W_{Q,K} with Q = N^alpha, K = N^kappa must either sit inside the
major arcs or be controlled by one of three minor-arc estimates. Each option
is a finite list of strict affine inequalities ``u*alpha + v*kappa < w`` with
coefficients depending on (delta, sigma); all evaluation is in exact
rationals.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Literal

import sympy as sp

from . import roots
from .errors import ParameterError

REGIONS = ("Major", "L86", "L82", "L84")
HALF = Fraction(1, 2)

# ascending coefficients of the published polynomials
DELTA_CUBIC = (1020, -8897, -5010, 12888)
SIGMA_CUBIC = (4995, -434163, 149452, 700)


def as_fraction(x) -> Fraction:
    """Exact value of an int, Fraction, float or decimal string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True)
class Constraint:
    """Strict inequality u*alpha + v*kappa < w."""

    name: str
    u: Fraction
    v: Fraction
    w: Fraction

    def holds(self, alpha: Fraction, kappa: Fraction) -> bool:
        return self.u * alpha + self.v * kappa < self.w

    def slack(self, alpha: Fraction, kappa: Fraction) -> Fraction:
        return self.w - self.u * alpha - self.v * kappa

    @property
    def is_constant(self) -> bool:
        return self.u == 0 and self.v == 0


@dataclass
class RegionSystem:
    delta: Fraction
    sigma: Fraction
    regions: dict[str, list[Constraint]]

    def constraints(self) -> Iterable[Constraint]:
        for cs in self.regions.values():
            yield from cs


def check_parameters(delta: Fraction, sigma: Fraction) -> None:
    if not Fraction(5, 6) < delta <= 1:
        raise ParameterError(f"delta={float(delta)} outside (5/6, 1]", bound="5/6 < delta <= 1")
    if not 0 < sigma < Fraction(1, 4):
        raise ParameterError(f"sigma={float(sigma)} outside (0, 1/4)", bound="0 < sigma < 1/4")


def region_system(delta, sigma) -> RegionSystem:
    d, s = as_fraction(delta), as_fraction(sigma)
    check_parameters(d, s)
    e = 1 - d
    C = Fraction
    e84 = (6 * d - 5) * (1 - 2 * s) / 84
    e42 = (6 * d - 5) * (1 - 2 * s) / 42
    regions = {
        "Major": [
            Constraint("MajGk", C(0), C(1), C(3, 2) * s * (d - HALF)),
            Constraint("MajGaGk", C(21), C(13), (2 * d - C(5, 3)) * s),
        ],
        "L86": [
            Constraint("S86b", C(-1), -(1 + d) / 2, -(C(3, 2) * e + d * s)),
            Constraint("NewEq1", C(0), C(0), s - 2 * e),
            Constraint("S86a", C(0), C(0), (132 * d - 131) / (96 * d - 10) - s),
        ],
        "L82": [
            Constraint("S82a", C(0), C(-1), -e / d),
            Constraint("S82b", C(2), C(1), e42 - e),
        ],
        "L84": [
            Constraint("S84a", C(-1), e, -3 * e),
            Constraint("S84b", C(0), e / 2, s - C(3, 2) * e),
            Constraint("S84c", C(1), e / 2, (1 + s) / 2 - C(3, 2) * e),
            Constraint("S84d", HALF, C(1), e84 - C(3, 2) * e),
            Constraint("S84e", C(1), C(1), e84 + s - C(3, 2) * e),
            Constraint("S84f", C(2), C(1), e84 + s / 2 + HALF - C(3, 2) * e),
        ],
    }
    return RegionSystem(d, s, regions)


def region_membership(delta, sigma, alpha, kappa) -> str:
    """First region (Major, L86, L82, L84) containing (alpha, kappa), else Uncovered."""
    system = region_system(delta, sigma)
    a, k = as_fraction(alpha), as_fraction(kappa)
    if not (0 <= a <= HALF and 0 <= k <= HALF):
        raise ParameterError(f"(alpha, kappa)=({alpha}, {kappa}) outside [0, 1/2]^2",
                             bound="alpha, kappa in [0, 1/2]")
    return _label(system, a, k)


def _label(system: RegionSystem, a: Fraction, k: Fraction) -> str:
    for name in REGIONS:
        if all(c.holds(a, k) for c in system.regions[name]):
            return name
    return "Uncovered"


# --- cover check ----------------------------------------------------------------------


@dataclass
class CoverResult:
    covered: bool
    witness: tuple[Fraction, Fraction] | None
    method: str
    columns_checked: int

    def witness_float(self) -> tuple[float, float] | None:
        return None if self.witness is None else (float(self.witness[0]), float(self.witness[1]))


def _kappa_interval(cs: list[Constraint], a: Fraction):
    """Open kappa-interval (lo, hi) of a region at alpha = a; None if empty.

    ``lo``/``hi`` of None mean unbounded.
    """
    lo = hi = None
    for c in cs:
        rhs = c.w - c.u * a
        if c.v == 0:
            if not rhs > 0:
                return None
        elif c.v > 0:
            b = rhs / c.v
            hi = b if hi is None or b < hi else hi
        else:
            b = rhs / c.v
            lo = b if lo is None or b > lo else lo
    if lo is not None and hi is not None and not lo < hi:
        return None
    return lo, hi


def _first_gap(intervals, top: Fraction) -> Fraction | None:
    """First point of the closed segment [0, top] outside a union of open intervals."""
    cur = Fraction(0)
    while True:
        best = None
        for lo, hi in intervals:
            if (lo is None or lo < cur) and (hi is None or hi > cur):
                if hi is None:
                    return None
                best = hi if best is None or hi > best else best
        if best is None:
            return cur
        if best > top:
            return None
        cur = best


def _critical_alphas(system: RegionSystem) -> list[Fraction]:
    lines = {(c.u, c.v, c.w) for c in system.constraints() if not c.is_constant}
    lines |= {(Fraction(1), Fraction(0), Fraction(0)), (Fraction(1), Fraction(0), HALF),
              (Fraction(0), Fraction(1), Fraction(0)), (Fraction(0), Fraction(1), HALF)}
    xs = {Fraction(0), HALF}
    for u, v, w in lines:
        if v == 0:
            xs.add(w / u)
    for (u1, v1, w1), (u2, v2, w2) in combinations(lines, 2):
        det = u1 * v2 - u2 * v1
        if det != 0:
            xs.add((w1 * v2 - w2 * v1) / det)
    xs = sorted(x for x in xs if 0 <= x <= HALF)
    out = []
    for x0, x1 in zip(xs, xs[1:]):
        out += [x0, (x0 + x1) / 2]
    out.append(xs[-1])
    return out


def _scan_columns(system: RegionSystem, alphas: Iterable[Fraction], top: Fraction, step=None):
    n = 0
    for a in alphas:
        n += 1
        ivs = []
        for name in REGIONS:
            iv = _kappa_interval(system.regions[name], a)
            if iv is not None:
                ivs.append(iv)
        if step is None:
            gap = _first_gap(ivs, top)
        else:
            gap = _first_grid_gap(ivs, step, top)
        if gap is not None:
            return (a, gap), n
    return None, n


def _first_grid_gap(intervals, h: Fraction, top: Fraction) -> Fraction | None:
    """First grid point j*h in [0, top] outside the union of open intervals."""
    J = int(top / h)
    ranges = []
    for lo, hi in intervals:
        jlo = 0 if lo is None else max(0, (lo / h).__floor__() + 1)
        jhi = J if hi is None else min(J, (hi / h).__ceil__() - 1)
        if jlo <= jhi:
            ranges.append((jlo, jhi))
    ranges.sort()
    cur = 0
    for jlo, jhi in ranges:
        if jlo > cur:
            break
        cur = max(cur, jhi + 1)
    return None if cur > J else cur * h


def full_cover(delta, sigma, method: Literal["exact_polygon", "grid"] = "exact_polygon",
               h: float | Fraction = Fraction(1, 10**4)) -> CoverResult:
    """Does the union of the four regions cover [0, 1/2]^2?

    ``exact_polygon`` checks every alpha-column of the line arrangement (all
    pairwise intersection abscissae and the midpoints between them); within
    one open slab the kappa-intervals keep their order, so this is complete.
    ``grid`` checks the lattice h*Z^2 exactly and returns the first uncovered
    lattice point.
    """
    system = region_system(delta, sigma)
    if method == "exact_polygon":
        witness, n = _scan_columns(system, _critical_alphas(system), HALF)
    elif method == "grid":
        h = as_fraction(h).limit_denominator(10**12)
        alphas = (i * h for i in range(int(HALF / h) + 1))
        witness, n = _scan_columns(system, alphas, HALF, step=h)
    else:
        raise ParameterError(f"unknown cover method {method!r}")
    return CoverResult(witness is None, witness, method, n)


# --- polygons, areas, active constraints ---------------------------------------------------


def _clip(poly: list[tuple[Fraction, Fraction]], c: Constraint):
    out = []
    n = len(poly)
    for i in range(n):
        P, Q = poly[i], poly[(i + 1) % n]
        sp_, sq = c.slack(*P), c.slack(*Q)
        if sp_ >= 0:
            out.append(P)
        if (sp_ > 0 > sq) or (sp_ < 0 < sq):
            t = sp_ / (sp_ - sq)
            out.append((P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])))
    return out


def region_polygon(system: RegionSystem, name: str) -> list[tuple[Fraction, Fraction]]:
    """Closure of a region inside [0, 1/2]^2 as a counter-clockwise vertex list."""
    poly = [(Fraction(0), Fraction(0)), (HALF, Fraction(0)), (HALF, HALF), (Fraction(0), HALF)]
    for c in system.regions[name]:
        if c.is_constant:
            if not c.w > 0:
                return []
            continue
        poly = _clip(poly, c)
        if not poly:
            return []
    dedup = []
    for p in poly:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def polygon_area(poly) -> Fraction:
    if len(poly) < 3:
        return Fraction(0)
    s = Fraction(0)
    for (x0, y0), (x1, y1) in zip(poly, poly[1:] + poly[:1]):
        s += x0 * y1 - x1 * y0
    return abs(s) / 2


def active_constraints(system: RegionSystem, name: str) -> list[str]:
    """Constraints whose boundary line carries an edge of the region polygon."""
    poly = region_polygon(system, name)
    out = []
    for c in system.regions[name]:
        if c.is_constant:
            continue
        on = [c.slack(*p) == 0 for p in poly]
        if any(on[i] and on[(i + 1) % len(poly)] for i in range(len(poly))) and len(poly) > 2:
            out.append(c.name)
    return out


def region_report(delta, sigma, cover: CoverResult | None = None) -> dict:
    system = region_system(delta, sigma)
    cover = cover or full_cover(delta, sigma)
    rep = {
        "delta": float(system.delta),
        "sigma": float(system.sigma),
        "covered": cover.covered,
        "region_areas": {n: float(polygon_area(region_polygon(system, n))) for n in REGIONS},
        "active_constraints": {n: active_constraints(system, n) for n in REGIONS},
    }
    if cover.witness is not None:
        rep["witness"] = {"alpha": float(cover.witness[0]), "kappa": float(cover.witness[1])}
    return rep


# --- critical polynomials and roots ----------------------------------------------------------


def region_system_holds(delta, sigma) -> bool:
    """The (delta, sigma) system: sigma > 2(1-delta), the corner condition and S86a."""
    d, s = as_fraction(delta), as_fraction(sigma)
    e = 1 - d
    corner = 21 * (e * (e / d) + 3 * e) + 13 * (e / d)
    return s > 2 * e and corner < (2 * d - Fraction(5, 3)) * s and s < (132 * d - 131) / (96 * d - 10)


@dataclass
class DerivedPolynomial:
    coefficients: tuple[int, ...]  # ascending, primitive, positive leading term
    degree: int
    published: tuple[int, ...]
    matches_published: bool
    note: str = ""


def _primitive(coeffs: list[int]) -> tuple[int, ...]:
    from math import gcd

    g = 0
    for c in coeffs:
        g = gcd(g, int(c))
    out = [int(c) // g for c in coeffs]
    if out[-1] < 0:
        out = [-c for c in out]
    return tuple(out)


def proportional(p: Iterable[int], q: Iterable[int]) -> bool:
    p, q = list(p), list(q)
    if len(p) != len(q):
        return False
    return all(p[i] * q[j] == p[j] * q[i] for i in range(len(p)) for j in range(len(p)))


def _symbolic_system():
    d, s = sp.symbols("delta sigma")
    e = 1 - d
    corner = 21 * (e * (e / d) + 3 * e) + 13 * (e / d)
    tight = corner - (2 * d - sp.Rational(5, 3)) * s
    s86a = (132 * d - 131) / (96 * d - 10)
    return d, s, tight, s86a


def derive_critical_polynomial() -> DerivedPolynomial:
    """Eliminate sigma between the tight corner condition and sigma = S86a bound."""
    d, s, tight, s86a = _symbolic_system()
    num = sp.numer(sp.together(tight.subs(s, s86a)))
    poly = sp.Poly(sp.expand(num), d)
    coeffs = _primitive([int(c) for c in reversed(poly.all_coeffs())])
    deg = poly.degree()
    ok = deg == 3 and proportional(coeffs, DELTA_CUBIC)
    note = "" if deg == 3 else f"elimination gave degree {deg}; inspect manually"
    return DerivedPolynomial(coeffs, deg, DELTA_CUBIC, ok, note)


def derive_sigma_polynomial() -> DerivedPolynomial:
    """Eliminate delta instead (resultant in delta), leaving a cubic in sigma."""
    d, s, tight, s86a = _symbolic_system()
    f = sp.numer(sp.together(tight))
    g = sp.numer(sp.together(s - s86a))
    res = sp.Poly(sp.factor_terms(sp.resultant(f, g, d)), s)
    coeffs = _primitive([int(c) for c in reversed(res.all_coeffs())])
    deg = res.degree()
    ok = deg == 3 and proportional(coeffs, SIGMA_CUBIC)
    return DerivedPolynomial(coeffs, deg, SIGMA_CUBIC, ok, "" if deg == 3 else "non-cubic")


def minimal_delta(tolerance: float = 1e-12, bracket: tuple | None = None,
                  coefficients=DELTA_CUBIC) -> float:
    """Largest real root of 1020 - 8897x - 5010x^2 + 12888x^3.

    With a ``bracket`` the root is bisected there after checking (Sturm count)
    that no larger root exists; otherwise the largest isolating interval is
    used.
    """
    if not tolerance > 0:
        raise ParameterError("tolerance must be positive")
    seq = roots.sturm_sequence(coefficients)
    if bracket is not None:
        lo, hi = (as_fraction(x) for x in bracket)
        if roots.count_roots(coefficients, hi, roots.cauchy_bound(coefficients), seq):
            raise ParameterError(f"bracket {bracket} does not contain the largest root")
        a, b = roots.bisect(coefficients, lo, hi, tolerance)
    else:
        lo, hi = roots.isolate(coefficients)[-1]
        a, b = roots.refine(coefficients, lo, hi, tolerance, seq)
    return float((a + b) / 2)


def critical_sigma(tolerance: float = 1e-12, coefficients=SIGMA_CUBIC) -> float:
    """Real root nearest the origin of 4995 - 434163x + 149452x^2 + 700x^3."""
    if not tolerance > 0:
        raise ParameterError("tolerance must be positive")
    seq = roots.sturm_sequence(coefficients)
    best = None
    for lo, hi in roots.isolate(coefficients):
        a, b = roots.refine(coefficients, lo, hi, tolerance, seq)
        r = (a + b) / 2
        if best is None or abs(r) < abs(best):
            best = r
    return float(best)


def feasible_sigmas(delta, sigmas: Iterable) -> list:
    """The sigmas in the scan for which the exact cover holds at delta."""
    return [s for s in sigmas if full_cover(delta, s).covered]


def scan_minimal_delta(deltas: Iterable, sigmas: Iterable) -> float | None:
    """Smallest delta in a sorted scan for which some scanned sigma gives a cover."""
    sigmas = list(sigmas)
    for d in sorted(deltas, key=as_fraction):
        if any(full_cover(d, s).covered for s in sigmas):
            return float(as_fraction(d))
    return None


# --- figure data -------------------------------------------------------------------


def _csv(rows) -> str:
    out = io.StringIO()
    out.write("x,y,region_label\n")
    for x, y, lab in rows:
        out.write(f"{x:.12g},{y:.12g},{lab}\n")
    return out.getvalue()


def feasibility_grid_data(delta_range=(0.9999, 1.0), sigma_range=(0.0, 0.03), steps=(100, 100)) -> str:
    """(delta, sigma) grid labelled by the reduced system; x = delta, y = sigma."""
    (d0, d1), (s0, s1) = delta_range, sigma_range
    rows = []
    for i in range(steps[0] + 1):
        d = as_fraction(d0) + (as_fraction(d1) - as_fraction(d0)) * i / steps[0]
        for j in range(steps[1] + 1):
            s = as_fraction(s0) + (as_fraction(s1) - as_fraction(s0)) * j / steps[1]
            ok = d > 0 and region_system_holds(d, s) if s > 0 else False
            rows.append((float(d), float(s), "feasible" if ok else "infeasible"))
    return _csv(rows)


def cubic_curve_data(x_range=(0.99990, 1.0), steps=200) -> str:
    """The critical cubic sampled near its largest root; x = delta, y = value."""
    x0, x1 = (as_fraction(x) for x in x_range)
    rows = []
    for i in range(steps + 1):
        x = x0 + (x1 - x0) * i / steps
        rows.append((float(x), float(roots.evaluate(DELTA_CUBIC, x)), "delta_cubic"))
    return _csv(rows)


def polygon_data(delta, sigma) -> str:
    """Region polygons in the (kappa, alpha) plane: x = kappa, y = alpha."""
    system = region_system(delta, sigma)
    rows = []
    for name in REGIONS:
        poly = region_polygon(system, name)
        for a, k in poly + poly[:1]:
            rows.append((float(k), float(a), name))
    return _csv(rows)


def region_json(rep: dict) -> str:
    return json.dumps(rep, indent=2, sort_keys=True) + "\n"
