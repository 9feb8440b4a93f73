"""Arithmetic mod q: reductions, admissibility, Ramanujan sums, local factors."""

from __future__ import annotations

import cmath
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal

from sympy import divisors, isprime, mobius, primerange

from .ball import Ball
from .errors import ParameterError
from .gl2 import ThinGroup
from .orbit import OrbitConfig

Residue = tuple[int, int, int, int]


def _mul(x: Residue, y: Residue, q: int) -> Residue:
    a, b, c, d = x
    e, f, g, h = y
    return ((a * e + b * g) % q, (a * f + b * h) % q, (c * e + d * g) % q, (c * f + d * h) % q)


@dataclass(frozen=True)
class ModGroup:
    q: int
    elements: frozenset[Residue]
    generators_mod: tuple[Residue, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def sorted_elements(self) -> list[Residue]:
        return sorted(self.elements)


@lru_cache(maxsize=128)
def _closure(gens: tuple[Residue, ...], q: int) -> frozenset[Residue]:
    ident = (1 % q, 0, 0, 1 % q)
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = _mul(x, g, q)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(seen)


def reduce_mod(group: ThinGroup, q: int) -> ModGroup:
    """Image of the group in SL(2, Z/qZ) by breadth-first closure.

    Inverses are included among the reduced generators, so the closure under
    multiplication is the subgroup they generate.
    """
    if q < 1:
        raise ParameterError(f"modulus must be >= 1, got {q}")
    gens = []
    for g in group.generators:
        gens.append(g.mod(q))
        gens.append(g.inverse().mod(q))
    gens = tuple(sorted(set(gens)))
    return ModGroup(q, _closure(gens, q), gens)


def sl2_order(q: int) -> int:
    """|SL(2, Z/qZ)| = q^3 prod_{p | q} (1 - 1/p^2)."""
    order = Fraction(q**3)
    for p in primerange(2, q + 1):
        if q % p == 0:
            order *= 1 - Fraction(1, p * p)
    return int(order)


def strong_approx_check(group: ThinGroup, p: int) -> bool:
    """True iff the reduction mod the prime p is all of SL(2, p)."""
    if not isprime(p):
        raise ParameterError(f"{p} is not prime")
    return len(reduce_mod(group, p)) == p * (p * p - 1)


def bad_primes(group: ThinGroup, bound: int) -> list[int]:
    """Primes p <= bound where the reduction is not onto SL(2, p)."""
    return [p for p in primerange(2, bound + 1) if not strong_approx_check(group, p)]


def _value_mod(m: Residue, cfg: OrbitConfig, q: int) -> int:
    (x, y), (u, v) = cfg.v0, cfg.w0
    a, b, c, d = m
    return ((x * a + y * c) * u + (x * b + y * d) * v) % q


def value_witnesses(cfg: OrbitConfig, q: int) -> dict[int, Residue]:
    """Residue -> smallest residue matrix attaining it."""
    out: dict[int, Residue] = {}
    for m in reduce_mod(cfg.group, q).sorted_elements():
        out.setdefault(_value_mod(m, cfg, q), m)
    return out


def values_mod(cfg: OrbitConfig, q: int) -> set[int]:
    """{ <v0 g, w0> mod q : g in the reduction mod q }."""
    return set(value_witnesses(cfg, q))


def ball_values_mod(ball: Ball, cfg: OrbitConfig, q: int) -> set[int]:
    """Residues reached by an enumerated ball; brute-force counterpart of values_mod."""
    vals = cfg.values(ball.matrix_array()) % q
    return set(vals.tolist())


def prime_powers_upto(q_max: int) -> dict[int, list[int]]:
    out = {}
    for p in primerange(2, q_max + 1):
        powers = []
        pe = p
        while pe <= q_max:
            powers.append(pe)
            pe *= p
        out[p] = powers
    return out


@dataclass
class AdmissibilityCertificate:
    n: int
    q_max: int
    checked_moduli: list[int]
    verdict: Literal["admissible", "excluded"]
    excluding_modulus: int | None = None
    witnesses: dict[int, Residue] = field(default_factory=dict)
    stabilized: dict[int, int] = field(default_factory=dict)

    @property
    def admissible(self) -> bool:
        return self.verdict == "admissible"

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "q_max": self.q_max,
            "verdict": self.verdict if self.admissible else f"excluded_by({self.excluding_modulus})",
            "checked_prime_powers": self.checked_moduli,
        }
        if self.excluding_modulus is not None:
            out["excluding_modulus"] = self.excluding_modulus
        return out


def _lifts_fully(lower: set[int], upper: set[int], q_low: int, q_up: int) -> bool:
    return upper == {v + j * q_low for v in lower for j in range(q_up // q_low)}


class AdmissibilityOracle:
    """Local admissibility relative to q_max, reusable across many n.

    For each prime p <= q_max the powers p, p^2, ... <= q_max are checked
    until the value set mod p^(e+1) is the full lift of the set mod p^e; the
    exponent where that happens is recorded as stabilised.
    """

    def __init__(self, cfg: OrbitConfig, q_max: int):
        if q_max < 2:
            raise ParameterError(f"q_max must be >= 2, got {q_max}", bound="q_max >= 2")
        self.cfg = cfg
        self.q_max = q_max
        self.moduli: list[int] = []
        self.stabilized: dict[int, int] = {}
        self._values: dict[int, dict[int, Residue]] = {}
        for p, powers in prime_powers_upto(q_max).items():
            prev = None
            for pe in powers:
                vals = value_witnesses(cfg, pe)
                self._values[pe] = vals
                self.moduli.append(pe)
                if prev is not None and _lifts_fully(set(self._values[prev]), set(vals), prev, pe):
                    self.stabilized[p] = prev
                    break
                prev = pe

    def __call__(self, n: int) -> bool:
        return all(n % q in self._values[q] for q in self.moduli)

    def certificate(self, n: int) -> AdmissibilityCertificate:
        witnesses = {}
        for q in self.moduli:
            vals = self._values[q]
            if n % q not in vals:
                return AdmissibilityCertificate(n, self.q_max, list(self.moduli), "excluded", q,
                                                stabilized=dict(self.stabilized))
            witnesses[q] = vals[n % q]
        return AdmissibilityCertificate(n, self.q_max, list(self.moduli), "admissible",
                                        witnesses=witnesses, stabilized=dict(self.stabilized))


def is_admissible(n: int, cfg: OrbitConfig, q_max: int) -> AdmissibilityCertificate:
    return AdmissibilityOracle(cfg, q_max).certificate(n)


# --- Ramanujan sums and local factors -----------------------------------------


def ramanujan_sum(q: int, x: int) -> int:
    """c_q(x) = sum over d | gcd(q, x) of d * mu(q / d)."""
    if q < 1:
        raise ParameterError(f"q must be >= 1, got {q}")
    g = math.gcd(q, x)
    return sum(d * int(mobius(q // d)) for d in divisors(g))


def ramanujan_sum_definitional(q: int, x: int) -> int:
    """Sum of e(a x / q) over units a mod q, rounded to the nearest integer."""
    s = sum(cmath.exp(2j * math.pi * a * x / q) for a in range(q) if math.gcd(a, q) == 1)
    r = round(s.real)
    if abs(s - r) > 1e-6:
        raise ArithmeticError(f"c_{q}({x}) sum {s} is not near an integer")
    return r


def sl2_elements(p: int) -> list[Residue]:
    """All of SL(2, p), built row by row: a != 0 fixes d; a = 0 forces c = -1/b."""
    out = []
    for a in range(1, p):
        ainv = pow(a, -1, p)
        for b in range(p):
            for c in range(p):
                out.append((a, b, c, (1 + b * c) * ainv % p))
    for b in range(1, p):
        c = -pow(b, -1, p) % p
        for d in range(p):
            out.append((0, b, c, d))
    return out


@dataclass
class LocalFactor:
    p: int
    n_class: Literal["divides", "coprime"]
    value: Fraction
    admissible_d: frozenset[int]
    group_order: int = 0
    matching: int = 0
    mode: str = "closed_form"

    @property
    def nonmatching(self) -> int:
        return self.group_order - self.matching


def local_factor(
    p: int,
    n: int,
    mode: Literal["closed_form", "brute_force"] = "closed_form",
    cfg: OrbitConfig | None = None,
) -> LocalFactor:
    """Local density at p: 1 + (1/|G|) sum_{g in G} c_p(<v0 g, w0> - n).

    ``closed_form`` assumes the reduction is all of SL(2, p), where the
    factor is 1 - 1/(p+1) if p | n and 1 + 1/(p^2-1) otherwise. ``brute_force``
    sums over SL(2, p) when ``cfg`` is None (with v0 = w0 = (0, 1)) and over
    the actual reduction of ``cfg.group`` otherwise.
    """
    if not isprime(p):
        raise ParameterError(f"local factors need a prime, got {p}")
    n_class = "divides" if n % p == 0 else "coprime"
    if mode == "closed_form":
        value = 1 - Fraction(1, p + 1) if n_class == "divides" else 1 + Fraction(1, p * p - 1)
        order = p * (p * p - 1)
        matching = p * p - p if n_class == "divides" else p * p
        return LocalFactor(p, n_class, value, frozenset(range(p)), order, matching, mode)
    if mode != "brute_force":
        raise ParameterError(f"unknown mode {mode!r}")
    if cfg is None:
        elements = sl2_elements(p)
        vals = [m[3] for m in elements]
    else:
        elements = list(reduce_mod(cfg.group, p).elements)
        vals = [_value_mod(m, cfg, p) for m in elements]
    tally = Counter(v % p for v in vals)
    total = sum(cnt * ramanujan_sum(p, v - n) for v, cnt in tally.items())
    value = 1 + Fraction(total, len(elements))
    return LocalFactor(p, n_class, value, frozenset(tally), len(elements), tally.get(n % p, 0), mode)


@dataclass
class SingularSeries:
    n: int
    p_max: int
    exact: Fraction
    factors: list[LocalFactor]
    bad_primes: list[int]

    @property
    def value(self) -> float:
        return float(self.exact)

    @property
    def good_product(self) -> Fraction:
        out = Fraction(1)
        for f in self.factors:
            if f.p not in self.bad_primes:
                out *= f.value
        return out

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("p,case,numerator,denominator\n")
        for f in self.factors:
            out.write(f"{f.p},{f.n_class},{f.value.numerator},{f.value.denominator}\n")
        return out.getvalue()


def singular_series(n: int, cfg: OrbitConfig, p_max: int) -> SingularSeries:
    """Truncated Euler product over p <= p_max; brute force at bad primes."""
    if p_max < 2:
        raise ParameterError(f"p_max must be >= 2, got {p_max}", bound="P_max >= 2")
    factors = []
    bad = []
    exact = Fraction(1)
    for p in primerange(2, p_max + 1):
        if strong_approx_check(cfg.group, p):
            f = local_factor(p, n, "closed_form")
        else:
            bad.append(p)
            f = local_factor(p, n, "brute_force", cfg)
        factors.append(f)
        exact *= f.value
    return SingularSeries(n, p_max, exact, factors, bad)


@dataclass
class CosetCounts:
    q: int
    counts: dict[Residue, int]
    group_order: int

    @property
    def ratio(self) -> float:
        vals = [c for c in self.counts.values() if c]
        return max(vals) / min(vals)

    @property
    def empty_classes(self) -> int:
        return self.group_order - len(self.counts)


def coset_counts(ball: Ball, q: int) -> CosetCounts:
    """Ball elements per residue class mod q (cosets of the level-q kernel)."""
    counts = Counter(tuple(x % q for x in m) for m in ball.mats)
    return CosetCounts(q, dict(sorted(counts.items())), len(reduce_mod(ball.group, q)))
