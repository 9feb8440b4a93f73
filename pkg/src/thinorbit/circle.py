"""Exponential sums, mollified major arcs, main/error terms and window probes.

Conventions: ``e(x) = exp(2 pi i x)``; S(theta) = sum_n r(n) e(n theta) for an
:class:`~thinorbit.orbit.OrbitHistogram`, so r(n) = int_0^1 S(theta) e(-n theta).
"""

from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sympy import divisors, mobius

from .errors import AliasingError, ParameterError
from .orbit import OrbitHistogram


class ArcOverlapWarning(UserWarning):
    pass


# --- triangle mollifier ----------------------------------------------------------


def psi(x):
    """Triangle function: 1 - |x| on (-1, 1), 0 outside."""
    x = np.asarray(x, dtype=float)
    out = np.clip(1.0 - np.abs(x), 0.0, None)
    return out if out.ndim else float(out)


def psi_hat(y):
    """Fourier transform of psi: (sin(pi y) / (pi y))^2, equal to 1 at y = 0."""
    out = np.sinc(np.asarray(y, dtype=float)) ** 2
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ArcParams:
    """Major-arc cutoffs Q0 = N^alpha0 (denominators) and K0 = N^kappa0 (widths).

    The plain constructor only needs N > 1, Q0 >= 1 and 0 < K0 <= N, which
    admits saturated configurations used as sanity checks;
    :meth:`from_exponents` enforces alpha0, kappa0 in (0, 1/2).
    """

    N: float
    Q0: float
    K0: float

    def __post_init__(self):
        if not self.N > 1:
            raise ParameterError(f"N must exceed 1, got {self.N}")
        if not self.Q0 >= 1:
            raise ParameterError(f"Q0 must be >= 1, got {self.Q0}")
        if not 0 < self.K0 <= self.N:
            raise ParameterError(f"K0 must lie in (0, N], got {self.K0}")

    @classmethod
    def from_exponents(cls, N: float, alpha0: float, kappa0: float) -> ArcParams:
        for name, v in (("alpha0", alpha0), ("kappa0", kappa0)):
            if not 0 < v < 0.5:
                raise ParameterError(f"{name}={v} outside (0, 1/2)", bound=f"0 < {name} < 1/2")
        return cls(N, N**alpha0, N**kappa0)

    @property
    def alpha0(self) -> float:
        return math.log(self.Q0) / math.log(self.N)

    @property
    def kappa0(self) -> float:
        return math.log(self.K0) / math.log(self.N)

    @property
    def halfwidth(self) -> float:
        return self.K0 / self.N

    @property
    def denominators(self) -> range:
        return range(1, math.ceil(self.Q0))  # 1 <= q < Q0

    def fractions(self) -> list[tuple[int, int]]:
        """(a, q) with 1 <= q < Q0, 0 <= a < q, gcd(a, q) = 1, sorted by a/q."""
        out = [(a, q) for q in self.denominators for a in range(q) if math.gcd(a, q) == 1]
        return sorted(out, key=lambda t: Fraction(*t))

    def min_gap(self) -> float:
        pts = [Fraction(a, q) for a, q in self.fractions()]
        if len(pts) == 1:
            return 1.0
        gaps = [float(y - x) for x, y in zip(pts, pts[1:])]
        gaps.append(float(1 - pts[-1] + pts[0]))
        return min(gaps)

    @property
    def overlap(self) -> bool:
        """True when two triangles around distinct fractions share support."""
        return self.min_gap() < 2 * self.halfwidth

    def report(self) -> dict:
        return {"N": self.N, "alpha0": self.alpha0, "kappa0": self.kappa0,
                "Q0": self.Q0, "K0": self.K0, "overlap_warning": self.overlap}


def Psi_NK(beta, arc: ArcParams):
    """sum_m psi((beta + m) N / K0), the triangle periodised to the circle."""
    b = np.asarray(beta, dtype=float)
    b = b - np.round(b)
    scale = arc.N / arc.K0
    out = psi((b - 1) * scale) + psi(b * scale) + psi((b + 1) * scale)
    return out if np.ndim(out) else float(out)


def major_weight(theta, arc: ArcParams, warn: bool = True):
    """M(theta) = sum_{q < Q0} sum_{(a,q)=1} Psi(theta - a/q); minor weight is 1 - M."""
    if warn and arc.overlap:
        warnings.warn(f"major-arc supports overlap (K0/N={arc.halfwidth:.3g}, "
                      f"min Farey gap {arc.min_gap():.3g})", ArcOverlapWarning, stacklevel=2)
    t = np.asarray(theta, dtype=float)
    out = np.zeros_like(t)
    for a, q in arc.fractions():
        out = out + Psi_NK(t - a / q, arc)
    return out if np.ndim(out) else float(out)


def minor_weight(theta, arc: ArcParams, warn: bool = True):
    out = 1.0 - np.asarray(major_weight(theta, arc, warn))
    return out if np.ndim(out) else float(out)


# --- Dirichlet decomposition ---------------------------------------------------


@dataclass(frozen=True)
class ThetaPoint:
    a: int
    q: int
    beta: float
    beta_exact: Fraction = field(repr=False, default=Fraction(0))

    @property
    def theta(self) -> float:
        return (self.a / self.q + self.beta) % 1.0


def _convergents(x: Fraction):
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    while True:
        a = x.numerator // x.denominator
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        yield h1, k1
        frac = x - a
        if frac == 0:
            return
        x = 1 / frac


def dirichlet_decompose(theta, N: float) -> ThetaPoint:
    """theta = a/q + beta with q < N^(1/2) and |beta| < 1/(q N^(1/2)).

    a/q is the last continued-fraction convergent with denominator below
    N^(1/2). Floats are expanded exactly, so rational inputs with small
    denominators come back with beta = 0.
    """
    if not N > 1:
        raise ParameterError(f"N must exceed 1, got {N}")
    x = Fraction(theta) % 1
    best = (0, 1)
    for h, k in _convergents(x):
        if k * k >= N:
            break
        best = (h, k)
    a, q = best
    beta = x - Fraction(a, q)
    a %= q
    return ThetaPoint(a, q, float(beta), beta)


# --- exponential sums ---------------------------------------------------------------


def S_theta(hist: OrbitHistogram, theta):
    """sum_n r(n) e(n theta), vectorised over theta."""
    ns, rs = hist.arrays()
    t = np.asarray(theta, dtype=float)
    flat = t.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    step = max(1, 4_000_000 // max(1, ns.size))
    for i in range(0, flat.size, step):
        phase = np.outer(flat[i:i + step], ns.astype(float))
        out[i:i + step] = np.exp(2j * np.pi * phase) @ rs
    return out.reshape(t.shape) if t.ndim else complex(out[0])


def grid_size(max_abs_n: int) -> int:
    """Smallest power of two >= 2 max|n| + 1."""
    need = 2 * max_abs_n + 1
    return 1 << max(0, (need - 1).bit_length())


def sample_grid(hist: OrbitHistogram, M: int | None = None) -> np.ndarray:
    """S(j/M) for j = 0..M-1 through one inverse FFT."""
    if M is None:
        M = grid_size(hist.max_abs())
    coeffs = np.zeros(M, dtype=complex)
    for n, c in hist.counts.items():
        coeffs[n % M] += c
    return np.fft.ifft(coeffs) * M


def invert_grid(samples: np.ndarray, max_abs_n: int, provenance: dict | None = None,
                rtol: float = 1e-9) -> OrbitHistogram:
    """Recover r(n) from M equispaced samples of S; needs M > 2 max|n|."""
    samples = np.asarray(samples, dtype=complex)
    M = samples.size
    if M <= 2 * max_abs_n:
        raise AliasingError(f"M={M} samples cannot resolve |n| <= {max_abs_n}; need M > {2 * max_abs_n}",
                            bound="M > 2 max|n|")
    coeffs = np.fft.fft(samples) / M
    mass = abs(samples[0])
    counts = {}
    for j in range(M):
        n = j if j <= M // 2 else j - M
        v = coeffs[j]
        r = round(v.real)
        if abs(v - r) > rtol * max(1.0, mass):
            raise ArithmeticError(f"coefficient at n={n} is {v}, not an integer within tolerance")
        if r:
            counts[n] = int(r)
    return OrbitHistogram(counts, sum(counts.values()), provenance or {"kind": "inverted", "M": M})


def parseval_gap(hist: OrbitHistogram, samples: np.ndarray) -> float:
    """Relative difference between (1/M) sum |S_j|^2 and sum r(n)^2."""
    lhs = float(np.mean(np.abs(samples) ** 2))
    rhs = float(sum(c * c for c in hist.counts.values()))
    return abs(lhs - rhs) / max(1.0, rhs)


# --- main term ------------------------------------------------------------------------


def ramanujan_sum_array(q: int, ks: np.ndarray) -> np.ndarray:
    """c_q(k) for an integer array via sum_{d | q, d | k} d mu(q/d)."""
    ks = np.asarray(ks, dtype=np.int64)
    out = np.zeros(ks.shape, dtype=np.int64)
    for d in divisors(q):
        mu = int(mobius(q // d))
        if mu:
            out += d * mu * (ks % d == 0)
    return out


def major_kernel(k, arc: ArcParams):
    """int_0^1 M(theta) e(k theta) dtheta = (K0/N) psi_hat(k K0/N) sum_{q<Q0} c_q(k)."""
    ks = np.asarray(k, dtype=np.int64)
    csum = np.zeros(ks.shape, dtype=np.int64)
    for q in arc.denominators:
        csum += ramanujan_sum_array(q, ks)
    h = arc.halfwidth
    out = h * psi_hat(ks * h) * csum
    return out if np.ndim(out) else float(out)


def main_term(hist: OrbitHistogram, arc: ArcParams, lo: int, hi: int) -> np.ndarray:
    """M_N(n) = sum_m r(m) kernel(m - n) for n = lo..hi, by direct convolution."""
    if not hist.counts:
        return np.zeros(hi - lo + 1)
    mmin, mmax = min(hist.counts), max(hist.counts)
    R = np.zeros(mmax - mmin + 1)
    for m, c in hist.counts.items():
        R[m - mmin] = c
    # kernel is even, so sum_m r(m) K(m - n) = (r * K)(n)
    kmin = lo - mmax
    kern = major_kernel(np.arange(kmin, hi - mmin + 1), arc)
    full = np.convolve(R, kern)
    start = mmax - mmin
    return full[start:start + hi - lo + 1]


def main_and_error(hist: OrbitHistogram, arc: ArcParams, lo: int | None = None,
                   hi: int | None = None) -> tuple[dict[int, float], dict[int, float]]:
    """(M_N, E_N) over n = lo..hi with E_N(n) = r(n) - M_N(n).

    Defaults to the histogram's support range.
    """
    if lo is None:
        lo = min(hist.counts, default=0)
    if hi is None:
        hi = max(hist.counts, default=0)
    main = main_term(hist, arc, lo, hi)
    ns = range(lo, hi + 1)
    M = {n: float(v) for n, v in zip(ns, main)}
    E = {n: hist[n] - M[n] for n in ns}
    return M, E


def error_l2(hist: OrbitHistogram, arc: ArcParams, extent: int) -> float:
    """sum of E_N(n)^2 over |n| <= extent (a truncation of the full series)."""
    main = main_term(hist, arc, -extent, extent)
    r = np.array([hist[n] for n in range(-extent, extent + 1)], dtype=float)
    return float(np.sum((r - main) ** 2))


def arcs_csv(hist: OrbitHistogram, M: dict[int, float], E: dict[int, float]) -> str:
    out = io.StringIO()
    out.write("n,r,main,error\n")
    for n in sorted(M):
        out.write(f"{n},{hist[n]},{M[n]:.12g},{E[n]:.12g}\n")
    return out.getvalue()


# --- quadrature oracle ----------------------------------------------------------------------


def _linear_pieces(arc: ArcParams) -> list[tuple[float, float]]:
    """Intervals of [0, 1] on which M(theta) is linear and not identically 0."""
    h = arc.halfwidth
    pts = {0.0, 1.0}
    for a, q in arc.fractions():
        c = a / q
        for x in (c - h, c, c + h):
            x = x % 1.0
            pts.add(x)
    pts = sorted(pts)
    pieces = []
    for x0, x1 in zip(pts, pts[1:]):
        if x1 - x0 <= 0:
            continue
        probe = major_weight(np.array([x0, 0.5 * (x0 + x1), x1]), arc, warn=False)
        if np.any(probe > 0):
            pieces.append((x0, x1))
    return pieces


def _nodes(arc: ArcParams, max_freq: float) -> tuple[np.ndarray, np.ndarray]:
    xs, ws = [], []
    for x0, x1 in _linear_pieces(arc):
        w = x1 - x0
        n = int(2 * math.pi * max_freq * w) + 32
        gx, gw = np.polynomial.legendre.leggauss(n)
        xs.append(0.5 * (x0 + x1) + 0.5 * w * gx)
        ws.append(0.5 * w * gw)
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def kernel_quadrature(k: int, arc: ArcParams) -> float:
    """int_0^1 M(theta) e(k theta) dtheta by Gauss-Legendre on the linear pieces."""
    x, w = _nodes(arc, abs(k) + 1)
    vals = major_weight(x, arc, warn=False) * np.exp(2j * np.pi * k * x)
    return float(np.real(np.sum(w * vals)))


def main_term_quadrature(hist: OrbitHistogram, arc: ArcParams, lo: int, hi: int) -> np.ndarray:
    """M_N(n) = int M(theta) S(theta) e(-n theta) dtheta, integrated directly."""
    span = max(abs(lo), abs(hi)) + hist.max_abs()
    x, w = _nodes(arc, span)
    weight = major_weight(x, arc, warn=False) * w
    s = S_theta(hist, x) * weight
    ns = np.arange(lo, hi + 1, dtype=float)
    out = np.empty(ns.size)
    step = max(1, 2_000_000 // max(1, x.size))
    for i in range(0, ns.size, step):
        out[i:i + step] = np.real(np.exp(-2j * np.pi * np.outer(ns[i:i + step], x)) @ s)
    return out


def minor_l2_quadrature(hist: OrbitHistogram, arc: ArcParams) -> float:
    """int |m(theta) S(theta)|^2 = sum r^2 - 2 int M |S|^2 + int M^2 |S|^2."""
    x, w = _nodes(arc, 2 * hist.max_abs())
    Mw = major_weight(x, arc, warn=False)
    s2 = np.abs(S_theta(hist, x)) ** 2
    total = float(sum(c * c for c in hist.counts.values()))
    return total - 2 * float(np.sum(w * Mw * s2)) + float(np.sum(w * Mw * Mw * s2))


# --- dyadic windows ----------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowSpec:
    """W_{Q,K}: q in [Q/2, Q) and |beta| in [K/(2N), K/N)."""

    Q: float
    K: float

    def contains(self, point: ThetaPoint, N: float) -> bool:
        b = abs(point.beta_exact) * Fraction(N)
        return self.Q / 2 <= point.q < self.Q and Fraction(self.K) / 2 <= b < Fraction(self.K)


def dyadic_scale(x: Fraction) -> Fraction:
    """The power of two X with X/2 <= x < X, for x > 0."""
    e = x.numerator.bit_length() - x.denominator.bit_length()
    X = Fraction(2) ** e
    while X <= x:
        X *= 2
    while X / 2 > x:
        X /= 2
    return X


def linf_bound(N, delta, sigma, Q, K) -> float:
    return N ** ((3 * delta + 1) / 2) * (
        1 / (K ** ((1 + delta) / 2) * Q) + N ** (-(6 * delta - 5) * (1 - 2 * sigma) / 84))


def sumP_bound(N, delta, sigma, Q) -> float:
    return N ** (delta + 1) * Q * (Q ** -0.5 + N ** -sigma + N ** (-sigma / 2 - 0.5) * Q)


def l2_bound(N, delta, sigma, sup) -> float:
    return math.log(N) * (N ** (delta + delta * sigma) * sup + N ** (2 * delta + 1 - sigma))


@dataclass
class WindowReport:
    Q: float
    K: float
    n_points: int
    sup: float
    sumP: float
    l2: float
    bounds: dict = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return self.n_points == 0


class ThetaGrid:
    """Samples of S on j/M with their Dirichlet decompositions at level N."""

    def __init__(self, hist: OrbitHistogram, N: float, M: int | None = None):
        need = 4 * hist.max_abs() + 1
        if M is None:
            M = 1 << max(0, (need - 1).bit_length())
        if M < need:
            raise ParameterError(f"grid of {M} points is too coarse; need M > 4 max|n| = {need - 1}",
                                 bound="M > 4 max|n|")
        self.hist, self.N, self.M = hist, N, M
        self.samples = sample_grid(hist, M)
        self.points = [dirichlet_decompose(Fraction(j, M), N) for j in range(M)]

    def window_key(self, j: int) -> tuple[Fraction, Fraction] | None:
        p = self.points[j]
        if p.beta_exact == 0:
            return None
        return dyadic_scale(Fraction(p.q)), dyadic_scale(abs(p.beta_exact) * Fraction(self.N))


def sum_over_P(hist: OrbitHistogram, Q: float, beta: float) -> float:
    """sum of |S(a/q + beta)| over q in [Q/2, Q), (a, q) = 1."""
    thetas = [a / q + beta for q in range(max(1, math.ceil(Q / 2)), math.ceil(Q))
              for a in range(q) if math.gcd(a, q) == 1]
    if not thetas:
        return 0.0
    return float(np.sum(np.abs(S_theta(hist, np.array(thetas)))))


def window_stats(hist: OrbitHistogram, spec: WindowSpec, N: float, grid: ThetaGrid | None = None,
                 beta: float | None = None, delta: float | None = None,
                 sigma: float | None = None) -> WindowReport:
    """sup |S|, sum over P_{Q,beta} of |S| and int over W_{Q,K} of |S|^2.

    The integral is the grid Riemann sum (1/M) sum |S(j/M)|^2 over grid points
    in the window. ``beta`` defaults to 3K/(4N), the middle of the window's
    |beta| range. With ``delta`` and ``sigma`` the theoretical bound shapes
    (constants dropped) are attached for scaling comparison.
    """
    if grid is None:
        grid = ThetaGrid(hist, N)
    idx = [j for j, p in enumerate(grid.points) if p.beta_exact != 0 and spec.contains(p, N)]
    mags = np.abs(grid.samples[idx]) if idx else np.zeros(0)
    if beta is None:
        beta = 0.75 * spec.K / N
    rep = WindowReport(
        Q=spec.Q,
        K=spec.K,
        n_points=len(idx),
        sup=float(mags.max()) if idx else 0.0,
        sumP=sum_over_P(hist, spec.Q, beta),
        l2=float(np.sum(mags**2)) / grid.M,
    )
    if delta is not None and sigma is not None:
        rep.bounds = {
            "linf": linf_bound(N, delta, sigma, spec.Q, spec.K),
            "sumP": sumP_bound(N, delta, sigma, spec.Q),
            "l2": l2_bound(N, delta, sigma, rep.sup),
        }
        rep.bounds["ratios"] = {
            "linf": rep.sup / rep.bounds["linf"],
            "sumP": rep.sumP / rep.bounds["sumP"],
            "l2": rep.l2 / rep.bounds["l2"],
        }
    return rep


@dataclass
class WindowSweep:
    windows: list[WindowReport]
    core_l2: float
    total_l2: float

    @property
    def partition_gap(self) -> float:
        got = sum(w.l2 for w in self.windows) + self.core_l2
        return abs(got - self.total_l2) / max(1.0, self.total_l2)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("Q,K,sup,sumP,l2\n")
        for w in self.windows:
            out.write(f"{_num(w.Q)},{_num(w.K)},{w.sup:.12g},{w.sumP:.12g},{w.l2:.12g}\n")
        return out.getvalue()


def _num(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def window_sweep(hist: OrbitHistogram, N: float, M: int | None = None, delta: float | None = None,
                 sigma: float | None = None) -> WindowSweep:
    """Every dyadic window met by the grid, plus the rational core (beta = 0).

    The window integrals and the core partition the grid, so together they
    sum to (1/M) sum |S_j|^2 = sum r(n)^2.
    """
    grid = ThetaGrid(hist, N, M)
    keys = sorted({k for j in range(grid.M) if (k := grid.window_key(j)) is not None})
    windows = [window_stats(hist, WindowSpec(Q, K), N, grid, delta=delta, sigma=sigma)
               for Q, K in keys]
    core = [j for j, p in enumerate(grid.points) if p.beta_exact == 0]
    core_l2 = float(np.sum(np.abs(grid.samples[core]) ** 2)) / grid.M
    total = float(np.sum(np.abs(grid.samples) ** 2)) / grid.M
    return WindowSweep(windows, core_l2, total)


def arc_report_json(arc: ArcParams) -> str:
    return json.dumps(arc.report(), indent=2, sort_keys=True) + "\n"
