"""Growth exponent 2*delta from ball counts |ball(N)| ~ c N^(2 delta)."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .ball import ball_sizes
from .errors import InputError
from .gl2 import ThinGroup


@dataclass
class GrowthFit:
    samples: list[tuple[float, int]]
    slope: float
    intercept: float
    residual: float

    @property
    def delta(self) -> float:
        return self.slope / 2

    def report(self) -> dict:
        return {"samples": [[N, c] for N, c in self.samples], "slope": self.slope,
                "delta": self.delta, "intercept": self.intercept, "residual": self.residual}

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("N,count\n")
        for N, c in self.samples:
            out.write(f"{N:.12g},{c}\n")
        return out.getvalue()


def fit_growth(counts) -> GrowthFit:
    """Least squares of log count against log N.

    ``residual`` is the root-mean-square residual in log space.
    """
    samples = sorted((float(N), int(c)) for N, c in counts)
    if len(samples) < 3:
        raise InputError(f"need at least 3 samples, got {len(samples)}")
    Ns = [N for N, _ in samples]
    if len(set(Ns)) != len(Ns):
        raise InputError("sample radii must be distinct")
    if any(N <= 1 or c <= 0 for N, c in samples):
        raise InputError("radii must exceed 1 and counts must be positive")
    x = np.log(np.array(Ns))
    y = np.log(np.array([c for _, c in samples], dtype=float))
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return GrowthFit(samples, float(slope), float(intercept), float(math.sqrt(np.mean(resid**2))))


def dyadic_counts(group: ThinGroup, a: int, b: int) -> list[tuple[float, int]]:
    """Ball sizes at N = 2^a, ..., 2^b from a single pruned walk."""
    radii = [2.0**e for e in range(a, b + 1)]
    return list(zip(radii, ball_sizes(group, radii)))
