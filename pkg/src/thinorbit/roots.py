"""Real roots of integer polynomials by Sturm isolation and exact bisection.

Polynomials are coefficient sequences in ascending order, c0 + c1 x + ...
All sign evaluations are done on :class:`fractions.Fraction` points.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Poly = Sequence[Fraction | int]


def trim(p: Poly) -> list[Fraction]:
    p = [Fraction(c) for c in p]
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def evaluate(p: Poly, x: Fraction | int) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def sign(p: Poly, x: Fraction | int) -> int:
    v = evaluate(p, x)
    return (v > 0) - (v < 0)


def derivative(p: Poly) -> list[Fraction]:
    return trim([Fraction(i) * c for i, c in enumerate(p)][1:] or [0])


def _rem(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    a = list(a)
    while len(a) >= len(b) and any(a):
        f = a[-1] / b[-1]
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] -= f * c
        a.pop()
    return trim(a or [0])


def sturm_sequence(p: Poly) -> list[list[Fraction]]:
    seq = [trim(p), derivative(p)]
    while len(seq[-1]) > 1 or seq[-1][0] != 0:
        r = _rem(seq[-2], seq[-1])
        if len(r) == 1 and r[0] == 0:
            break
        seq.append([-c for c in r])
    return seq


def _variations(seq, x) -> int:
    signs = [s for s in (sign(q, x) for q in seq) if s]
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def count_roots(p: Poly, lo: Fraction, hi: Fraction, seq=None) -> int:
    """Number of distinct real roots in (lo, hi]."""
    seq = seq or sturm_sequence(p)
    return _variations(seq, lo) - _variations(seq, hi)


def cauchy_bound(p: Poly) -> Fraction:
    p = trim(p)
    lead = abs(p[-1])
    return 1 + max(abs(c) for c in p[:-1]) / lead


def isolate(p: Poly) -> list[tuple[Fraction, Fraction]]:
    """Disjoint intervals (lo, hi], each holding exactly one real root."""
    seq = sturm_sequence(p)
    B = cauchy_bound(p)
    out = []
    stack = [(-B, B)]
    while stack:
        lo, hi = stack.pop()
        n = count_roots(p, lo, hi, seq)
        if n == 0:
            continue
        if n == 1:
            out.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        stack += [(lo, mid), (mid, hi)]
    return sorted(out)


def bisect(p: Poly, lo: Fraction, hi: Fraction, tol: float) -> tuple[Fraction, Fraction]:
    """Shrink [lo, hi] around a sign change of p until hi - lo <= tol."""
    lo, hi = Fraction(lo), Fraction(hi)
    slo, shi = sign(p, lo), sign(p, hi)
    if slo == 0:
        return lo, lo
    if shi == 0:
        return hi, hi
    if slo == shi:
        raise ValueError(f"no sign change on [{float(lo)}, {float(hi)}]")
    tol = Fraction(tol)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        s = sign(p, mid)
        if s == 0:
            return mid, mid
        if s == slo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def refine(p: Poly, lo: Fraction, hi: Fraction, tol: float, seq=None) -> tuple[Fraction, Fraction]:
    """Shrink an isolating interval (lo, hi] to width tol.

    Uses sign bisection when p changes sign strictly inside, which covers
    every simple root; otherwise halves by Sturm counts.
    """
    if sign(p, hi) == 0:
        return hi, hi
    if sign(p, lo) != 0 and sign(p, lo) != sign(p, hi):
        return bisect(p, lo, hi, tol)
    seq = seq or sturm_sequence(p)
    tol = Fraction(tol)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if count_roots(p, lo, mid, seq):
            hi = mid
        else:
            lo = mid
    return lo, hi


def real_roots(p: Poly, tol: float = 1e-15) -> list[float]:
    seq = sturm_sequence(p)
    out = []
    for lo, hi in isolate(p):
        a, b = refine(p, lo, hi, tol, seq)
        out.append(float((a + b) / 2))
    return out
