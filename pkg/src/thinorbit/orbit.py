"""Orbit values <v0 g, w0> and their representation histograms."""

from __future__ import annotations

import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .ball import Ball, SectorSets, radius_sq
from .errors import ConfigurationError, InputError
from .gl2 import GroupElement, ThinGroup, format_codes


@dataclass(frozen=True)
class OrbitConfig:
    group: ThinGroup
    v0: tuple[int, int] = (0, 1)
    w0: tuple[int, int] = (0, 1)

    def __post_init__(self):
        for name in ("v0", "w0"):
            v = tuple(int(x) for x in getattr(self, name))
            if len(v) != 2 or v == (0, 0) or math.gcd(*v) != 1:
                raise InputError(f"{name}={v} must be a primitive nonzero integer vector")
            object.__setattr__(self, name, v)

    @property
    def base_value(self) -> int:
        """<v0, w0>, the value at the identity."""
        return self.v0[0] * self.w0[0] + self.v0[1] * self.w0[1]

    def values(self, mats: np.ndarray) -> np.ndarray:
        """Vectorised <v0 g, w0> for an (n, 4) array of (a, b, c, d)."""
        (x, y), (u, v) = self.v0, self.w0
        a, b, c, d = mats[:, 0], mats[:, 1], mats[:, 2], mats[:, 3]
        return (x * a + y * c) * u + (x * b + y * d) * v


def inner_value(gamma: GroupElement, cfg: OrbitConfig) -> int:
    """<v0 * gamma, w0> with v0 acting as a row vector."""
    m = gamma.matrix
    (x, y), (u, v) = cfg.v0, cfg.w0
    return (x * m.a + y * m.c) * u + (x * m.b + y * m.d) * v


@dataclass
class OrbitHistogram:
    """Sparse multiplicities n -> r(n)."""

    counts: dict[int, int]
    total_mass: int
    provenance: dict
    witnesses: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        self.counts = {int(n): int(c) for n, c in self.counts.items() if c}
        if sum(self.counts.values()) != self.total_mass:
            raise ConfigurationError("total_mass differs from the sum of counts")

    def __getitem__(self, n: int) -> int:
        return self.counts.get(n, 0)

    def __add__(self, other: OrbitHistogram) -> OrbitHistogram:
        merged = Counter(self.counts)
        merged.update(other.counts)
        wit = dict(other.witnesses)
        wit.update(self.witnesses)
        return OrbitHistogram(dict(merged), self.total_mass + other.total_mass,
                              {"kind": "merged", "parts": [self.provenance, other.provenance]}, wit)

    def support(self) -> list[int]:
        return sorted(self.counts)

    def max_abs(self) -> int:
        return max((abs(n) for n in self.counts), default=0)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        ns = np.array(self.support(), dtype=np.int64)
        rs = np.array([self.counts[n] for n in ns.tolist()], dtype=np.float64)
        return ns, rs

    def negated(self) -> OrbitHistogram:
        return OrbitHistogram({-n: c for n, c in self.counts.items()}, self.total_mass,
                              dict(self.provenance, negated=True))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("n,count\n")
        for n in self.support():
            out.write(f"{n},{self.counts[n]}\n")
        return out.getvalue()

    def report(self) -> dict:
        return {"total_mass": self.total_mass, "provenance": self.provenance,
                "support_size": len(self.counts)}


def _counts(values: np.ndarray) -> dict[int, int]:
    if values.size == 0:
        return {}
    uniq, cnt = np.unique(values, return_counts=True)
    return dict(zip(uniq.tolist(), cnt.tolist()))


def histogram_simple(ball: Ball, cfg: OrbitConfig, witness_cap: int = 0) -> OrbitHistogram:
    """r(n) = #{g in ball : <v0 g, w0> = n}.

    ``witness_cap`` > 0 keeps, for up to that many values n, the shortest-norm
    word attaining it.
    """
    if len(ball) == 0:
        return OrbitHistogram({}, 0, {"kind": "simple", "N": ball.N})
    values = cfg.values(ball.matrix_array())
    witnesses: dict[int, str] = {}
    if witness_cap:
        for n, w in zip(values.tolist(), ball.words):
            if n not in witnesses:
                witnesses[n] = format_codes(w, ball.group.labels)
                if len(witnesses) >= witness_cap:
                    break
    return OrbitHistogram(_counts(values), len(ball), {"kind": "simple", "N": ball.N}, witnesses)


def _element_array(elems: list[GroupElement]) -> np.ndarray:
    return np.array([e.matrix.as_tuple() for e in elems], dtype=np.int64).reshape(len(elems), 4)


def histogram_triple(sectors: SectorSets, small_ball: Ball, cfg: OrbitConfig,
                     witness_cap: int = 0) -> OrbitHistogram:
    """Counts triples (xi, pi, g) with <v0 g xi pi, w0> = n, ||g|| < N^sigma."""
    N, sigma = sectors.N, sectors.sigma
    if sectors.group is not None and sectors.group != small_ball.group:
        raise ConfigurationError("sectors and small ball come from different groups")
    if sectors.group is not None and sectors.group != cfg.group:
        raise ConfigurationError("orbit configuration uses a different group")
    if abs(radius_sq(small_ball.N) - radius_sq(N**sigma)) > 1e-9 * max(1.0, radius_sq(N**sigma)):
        raise ConfigurationError(f"small ball radius {small_ball.N} != N^sigma = {N ** sigma}")
    provenance = {"kind": "triple", "N": N, "sigma": sigma,
                  "xi": len(sectors.xi), "pi": len(sectors.pi), "small": len(small_ball)}
    total = len(sectors.xi) * len(sectors.pi) * len(small_ball)
    if total == 0:
        return OrbitHistogram({}, 0, provenance)

    X = _element_array(sectors.xi).reshape(-1, 2, 2)
    P = _element_array(sectors.pi).reshape(-1, 2, 2)
    G = small_ball.matrix_array().reshape(-1, 2, 2)
    w0 = np.array(cfg.w0, dtype=np.int64)
    v0 = np.array(cfg.v0, dtype=np.int64)
    y = P @ w0  # (|Pi|, 2)
    z = np.einsum("xij,pj->xpi", X, y).reshape(-1, 2)  # xi pi w0^T, xi-major
    u = G.transpose(0, 2, 1) @ v0  # rows v0 g
    values = u @ z.T  # (|small|, |Xi||Pi|)
    hist = _counts(values.ravel())

    witnesses: dict[int, str] = {}
    if witness_cap:
        labels = cfg.group.labels
        n_pi = len(sectors.pi)
        flat = values.ravel()
        first = {}
        for idx, n in enumerate(flat.tolist()):
            if n not in first:
                first[n] = idx
                if len(first) >= witness_cap:
                    break
        for n, idx in first.items():
            gi, rest = divmod(idx, z.shape[0])
            xi_i, pi_i = divmod(rest, n_pi)
            word = (small_ball.words[gi] + sectors.xi[xi_i].word.codes() + sectors.pi[pi_i].word.codes())
            witnesses[n] = format_codes(_free_reduce(word), labels)
    return OrbitHistogram(hist, total, provenance, witnesses)


def _free_reduce(codes: bytes) -> bytes:
    out = bytearray()
    for c in codes:
        if out and out[-1] == c ^ 1:
            out.pop()
        else:
            out.append(c)
    return bytes(out)


def exceptional_set(hist: OrbitHistogram, admissible: Callable[[int], bool], N: int) -> list[int]:
    """Admissible |n| < N with r(n) = 0, sorted."""
    N = int(math.ceil(N))
    return [n for n in range(-N + 1, N) if hist[n] == 0 and admissible(n)]


def exceptional_csv(values: Iterable[int]) -> str:
    return "n\n" + "".join(f"{n}\n" for n in values)


@dataclass
class MultiplicityProfile:
    represented: int
    mean: float
    max: int


def multiplicity_profile(hist: OrbitHistogram, N: float) -> MultiplicityProfile:
    """Mean and max of r(n) over represented n with |n| < N."""
    vals = [c for n, c in hist.counts.items() if abs(n) < N]
    if not vals:
        return MultiplicityProfile(0, 0.0, 0)
    return MultiplicityProfile(len(vals), sum(vals) / len(vals), max(vals))


def histogram_json(hist: OrbitHistogram, **params) -> str:
    return json.dumps(dict(hist.report(), parameters=params), indent=2, sort_keys=True) + "\n"
