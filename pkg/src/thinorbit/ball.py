"""Norm balls {g in Gamma : ||g|| < N}, sector sets and desk-scale checks."""

from __future__ import annotations

import bisect
import io
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Literal

import numpy as np

from .errors import DegenerateInputError, ParameterError, ResourceError
from .gl2 import (
    GroupElement,
    Letter,
    Mat2Z,
    ThinGroup,
    Word,
    code_letter,
    format_codes,
    letter_code,
)

Mode = Literal["pruned", "exhaustive_by_length"]

DEFAULT_ELEMENT_CAP = 20_000_000
DEFAULT_WORD_CAP = 5_000_000


def radius_sq(N: float) -> float:
    """N^2, snapped to the nearest integer when within 1e-9 relative of it.

    Squared norms are integers, so this makes radii such as ``math.sqrt(2)``
    behave like the exact surd under the strict ``||g|| < N`` test.
    """
    t = float(N) * float(N)
    r = round(t)
    if abs(t - r) <= 1e-9 * max(1.0, t):
        return float(r)
    return t


@dataclass
class Ball:
    """Elements of norm < N, stored compactly.

    ``words[i]`` is the letter-code string of element ``i`` and ``mats[i]``
    its matrix ``(a, b, c, d)``. Elements are sorted by
    ``(norm2, word length, codes)``.
    """

    group: ThinGroup
    N: float
    words: list[bytes]
    mats: list[tuple[int, int, int, int]]
    report: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[GroupElement]:
        for w, m in zip(self.words, self.mats):
            yield GroupElement(Word.from_codes(w), Mat2Z(*m))

    @property
    def elements(self) -> list[GroupElement]:
        return list(self)

    def matrix_array(self) -> np.ndarray:
        arr = np.array(self.mats, dtype=np.int64)
        return arr.reshape(len(self.mats), 4)

    def norm2_array(self) -> np.ndarray:
        m = self.matrix_array()
        return (m * m).sum(axis=1)

    def restrict(self, N: float) -> Ball:
        """Sub-ball of radius N <= self.N (balls are nested)."""
        if N > self.N:
            raise ParameterError(f"cannot restrict a ball of radius {self.N} to {N}")
        # elements are sorted by squared norm, so the sub-ball is a prefix
        cut = bisect.bisect_left(self.mats, radius_sq(N), key=_n2)
        return Ball(self.group, N, self.words[:cut], self.mats[:cut],
                    dict(self.report, restricted_from=self.N))

    def word_strings(self) -> list[str]:
        return [format_codes(w, self.group.labels) for w in self.words]


def _n2(m) -> int:
    return m[0] * m[0] + m[1] * m[1] + m[2] * m[2] + m[3] * m[3]


def _sort_key(item):
    w, m = item
    return (_n2(m), len(w), w)


def _explore(letters, start_code, start_mat, t, t_prune, cap):
    """Depth-first search of the subtree below one first letter.

    Norms are tested when a child is formed, so pruned children are never
    stored or pushed.
    """
    words: list[bytes] = []
    mats: list[tuple] = []
    a, b, c, d = start_mat
    n2 = a * a + b * b + c * c + d * d
    if n2 < t:
        words.append(bytes([start_code]))
        mats.append(start_mat)
    stack = [(start_mat, bytes([start_code]))] if n2 < t_prune else []
    visited = len(stack)
    codes = [(code, code ^ 1, letters[code]) for code in range(len(letters))]
    while stack:
        (a, b, c, d), w = stack.pop()
        forbid = w[-1] ^ 1
        for code, _, (e, f, g, h) in codes:
            if code == forbid:
                continue
            A = a * e + b * g
            B = a * f + b * h
            C = c * e + d * g
            D = c * f + d * h
            n2 = A * A + B * B + C * C + D * D
            if n2 >= t_prune:
                continue
            visited += 1
            child = w + bytes((code,))
            if n2 < t:
                words.append(child)
                mats.append((A, B, C, D))
                if len(words) > cap:
                    raise ResourceError(f"ball exceeds element cap {cap}", partial_count=len(words))
            stack.append(((A, B, C, D), child))
    return words, mats, visited


def _explore_star(args):
    return _explore(*args)


def _finish(group, N, words, mats, report):
    order = sorted(zip(words, mats), key=_sort_key)
    return Ball(group, N, [w for w, _ in order], [m for _, m in order], report)


INT64_SAFE = 2.0**60


def _numpy_safe(t_prune: float, C: float) -> bool:
    """Children of pruned-tree nodes have squared norm < t_prune * C^2."""
    return t_prune * C * C < INT64_SAFE


def _expand(mats, last, letters, t_prune):
    """One layer of the word tree: children of every node, pruned at t_prune."""
    kids, kid_n2, parents, codes = [], [], [], []
    a, b, c, d = mats[:, 0], mats[:, 1], mats[:, 2], mats[:, 3]
    for code, (e, f, g, h) in enumerate(letters):
        A = a * e + b * g
        B = a * f + b * h
        C = c * e + d * g
        D = c * f + d * h
        n2 = A * A + B * B + C * C + D * D
        keep = np.flatnonzero((last != (code ^ 1)) & (n2 < t_prune))
        kids.append(np.stack([A[keep], B[keep], C[keep], D[keep]], axis=1))
        kid_n2.append(n2[keep])
        parents.append(keep)
        codes.append(np.full(keep.size, code, dtype=np.int64))
    return (np.concatenate(kids), np.concatenate(kid_n2), np.concatenate(parents),
            np.concatenate(codes))


def _root(letters):
    return np.array([[1, 0, 0, 1]], dtype=np.int64), np.array([-2], dtype=np.int64)


def _enumerate_numpy(group: ThinGroup, N: float, t: float, t_prune: float, cap: int) -> Ball:
    """Layer-by-layer walk of the pruned word tree with int64 arrays.

    Within a layer, words are ordered lexicographically by ranking
    (parent's rank, last letter); only ball members keep their matrices.
    """
    letters = group.letter_matrices()
    mats, last = _root(letters)
    # per layer: parent index, letter code, lexicographic rank within the layer
    tree = [(np.zeros(1, np.int32), np.zeros(1, np.uint8), np.zeros(1, np.int64))]
    members = [(np.zeros(1, np.int64), mats.copy(), np.array([2], np.int64))]
    visited, found = 1, 1
    while True:
        mats, n2, parent, last = _expand(mats, last, letters, t_prune)
        if not len(mats):
            break
        visited += len(mats)
        prev_rank = tree[-1][2]
        order = np.lexsort((last, prev_rank[parent]))
        rank = np.empty(len(order), np.int64)
        rank[order] = np.arange(len(order))
        tree.append((parent.astype(np.int32), last.astype(np.uint8), rank))
        idx = np.flatnonzero(n2 < t)
        found += idx.size
        if found > cap:
            raise ResourceError(f"ball exceeds element cap {cap}", partial_count=found)
        members.append((idx, mats[idx], n2[idx]))

    # spell all member words in one backward pass over the layers; members
    # of layer L join the pass when it reaches L
    lens = np.concatenate([np.full(idx.size, L) for L, (idx, _, _) in enumerate(members)])
    ptr = np.concatenate([idx for idx, _, _ in members])
    starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
    buf = np.zeros(int(lens.sum()), dtype=np.uint8)
    for back in range(len(members) - 1, 0, -1):
        act = np.flatnonzero(lens >= back)
        parent, code, _ = tree[back]
        p = ptr[act]
        buf[starts[act] + back - 1] = code[p]
        ptr[act] = parent[p]
    raw = buf.tobytes()
    words = [raw[s:s + n] for s, n in zip(starts.tolist(), lens.tolist())]
    keys = [np.stack([n2, np.full(idx.size, L), tree[L][2][idx]], axis=1)
            for L, (idx, _, n2) in enumerate(members)]
    all_mats = [m for _, m, _ in members]
    K = np.concatenate(keys)
    order = np.lexsort((K[:, 2], K[:, 1], K[:, 0]))
    M = np.concatenate(all_mats)[order]
    words = [words[i] for i in order.tolist()]
    report = {"mode": "pruned", "prune_factor": group.max_operator_norm(), "nodes_visited": visited}
    return Ball(group, N, words, list(map(tuple, M.tolist())), report)


def ball_sizes(group: ThinGroup, radii) -> list[int]:
    """|ball(N)| for each N in radii, from one pruned walk without storing words."""
    radii = list(radii)
    ts = np.array([radius_sq(N) for N in radii])
    C = group.max_operator_norm()
    t_prune = float(ts.max()) * C * C
    if not _numpy_safe(t_prune, C):
        big = enumerate_ball(group, max(radii))
        norms = np.sort(big.norm2_array())
        return [int(np.searchsorted(norms, t, side="left")) for t in ts]
    counts = np.zeros(len(ts), dtype=np.int64)
    letters = group.letter_matrices()
    mats, last = _root(letters)
    counts += ts > 2
    while len(mats):
        mats, n2, _, last = _expand(mats, last, letters, t_prune)
        counts += (n2[None, :] < ts[:, None]).sum(axis=1)
    return counts.tolist()


def _enumerate_pruned(group: ThinGroup, N: float, cap: int, workers: int) -> Ball:
    t = radius_sq(N)
    C = group.max_operator_norm()
    if t <= 2:
        return Ball(group, N, [], [], {"mode": "pruned", "prune_factor": C, "nodes_visited": 0})
    t_prune = t * C * C
    # the array walk is faster than any process split; workers only serve
    # radii where int64 could overflow
    if _numpy_safe(t_prune, C):
        return _enumerate_numpy(group, N, t, t_prune, cap)
    letters = group.letter_matrices()
    words: list[bytes] = [b""]
    mats: list[tuple] = [(1, 0, 0, 1)]
    jobs = [(letters, code, letters[code], t, t_prune, cap) for code in range(len(letters))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_explore_star, jobs))
    else:
        results = [_explore(*j) for j in jobs]
    visited = 1
    for w, m, v in results:
        words += w
        mats += m
        visited += v
    if len(words) > cap:
        raise ResourceError(f"ball exceeds element cap {cap}", partial_count=len(words))
    report = {"mode": "pruned", "prune_factor": C, "nodes_visited": visited}
    return _finish(group, N, words, mats, report)


def exhaustive_length_bound(group: ThinGroup, N: float) -> int:
    """Largest word length that can still have norm < N.

    For the Sanov family with parameter k, ping-pong on row vectors gives
    ``max|entry of e_i w| >= (k-1) L + 1`` for every reduced word of length L,
    and the other row is a nonzero integer vector, so
    ``||w||^2 >= ((k-1) L + 1)^2 + 1``.
    """
    if group.sanov_k is None:
        raise ParameterError(
            "no completeness length bound is known for this group; pass max_length",
            bound="max_length",
        )
    k = group.sanov_k
    t = radius_sq(N)
    L = 0
    while ((k - 1) * (L + 1) + 1) ** 2 + 1 < t:
        L += 1
    return L


def _enumerate_exhaustive(group: ThinGroup, N: float, max_length: int | None, word_cap: int) -> Ball:
    if max_length is None:
        max_length = exhaustive_length_bound(group, N)
    t = radius_sq(N)
    letters = group.letter_matrices()
    n_codes = len(letters)
    layer = [((1, 0, 0, 1), b"")]
    words, mats = [], []
    n_words = 0
    for length in range(max_length + 1):
        nxt = []
        for (a, b, c, d), w in layer:
            n_words += 1
            if a * a + b * b + c * c + d * d < t:
                words.append(w)
                mats.append((a, b, c, d))
            if length == max_length:
                continue
            forbid = w[-1] ^ 1 if w else -1
            for code in range(n_codes):
                if code == forbid:
                    continue
                e, f, g, h = letters[code]
                nxt.append(((a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h),
                            w + bytes([code])))
        if n_words + len(nxt) > word_cap:
            raise ResourceError(f"exhaustive enumeration exceeds word cap {word_cap}",
                                partial_count=len(words))
        layer = nxt
    report = {"mode": "exhaustive_by_length", "length_bound": max_length, "words_checked": n_words}
    return _finish(group, N, words, mats, report)


def enumerate_ball(
    group: ThinGroup,
    N: float,
    mode: Mode = "pruned",
    *,
    max_length: int | None = None,
    cap: int = DEFAULT_ELEMENT_CAP,
    workers: int = 1,
) -> Ball:
    """All g in the group with ||g|| < N.

    ``pruned`` walks the word tree and abandons a branch once its norm reaches
    N * C, C the largest operator norm of a generator. ``exhaustive_by_length``
    checks every reduced word up to a completeness length bound and is the
    oracle the pruned mode is validated against. Radii N <= sqrt(2) give an
    empty ball.
    """
    if not N > 0:
        raise ParameterError(f"radius must be positive, got {N}", bound="N > 0")
    if mode == "pruned":
        return _enumerate_pruned(group, N, cap, workers)
    if mode == "exhaustive_by_length":
        return _enumerate_exhaustive(group, N, max_length, min(cap, DEFAULT_WORD_CAP))
    raise ParameterError(f"unknown enumeration mode {mode!r}")


def validate_pruning(group: ThinGroup, N: float = 10.0, max_length: int | None = None):
    """Cross-check pruned against exhaustive enumeration at radius N.

    Returns ``(group, report)``; the group carries the ``pruning_validated``
    stamp when both element sets agree.
    """
    pruned = enumerate_ball(group, N, "pruned")
    exhaustive = enumerate_ball(group, N, "exhaustive_by_length", max_length=max_length)
    agree = set(zip(pruned.words, pruned.mats)) == set(zip(exhaustive.words, exhaustive.mats))
    report = {
        "N": N,
        "pruned_count": len(pruned),
        "exhaustive_count": len(exhaustive),
        "length_bound": exhaustive.report["length_bound"],
        "agree": agree,
    }
    if agree:
        group = group.with_stamp("pruning_validated")
    return group, report


# --- sectors -----------------------------------------------------------------


@dataclass
class SectorSets:
    """Xi (words ending in one letter) and Pi (words starting with one letter)."""

    xi: list[GroupElement]
    pi: list[GroupElement]
    sigma: float
    N: float
    xi_letter: Letter
    pi_letter: Letter
    pi_prefix: Letter | None = None
    group: ThinGroup | None = None

    @property
    def pi_start(self) -> Letter:
        return self.pi_prefix if self.pi_prefix is not None else self.pi_letter

    def summary(self) -> dict:
        return {
            "N": self.N,
            "sigma": self.sigma,
            "xi_size": len(self.xi),
            "pi_size": len(self.pi),
            "xi_letter": list(self.xi_letter),
            "pi_letter": list(self.pi_letter),
            "pi_prefix": list(self.pi_prefix) if self.pi_prefix else None,
        }


def sigma_upper_bound(N: float) -> float:
    return 0.25 - math.log(4) / math.log(N)


def _grouped(ball: Ball, t: float, pick) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = defaultdict(list)
    for i, (w, m) in enumerate(zip(ball.words, ball.mats)):
        if w and _n2(m) < t:
            groups[pick(w)].append(i)
    return groups


def _best(groups: dict[int, list[int]]) -> int:
    # most elements; ties to the lowest letter code
    return min(groups, key=lambda code: (-len(groups[code]), code))


def build_sectors(
    ball: Ball,
    sigma: float,
    N: float,
    *,
    pi_letter: Letter | None = None,
    check_sigma_bound: bool = True,
) -> SectorSets:
    """Choose Xi in the ball of radius N^(1/2) and Pi in radius N^(1/2 - sigma).

    ``check_sigma_bound`` enforces sigma < 1/4 - log 4 / log N, which no sigma
    satisfies until N > 256; desk examples switch it off.
    """
    if not 0 < sigma < 0.25:
        raise ParameterError(f"sigma={sigma} outside (0, 1/4)", bound="0 < sigma < 1/4")
    if check_sigma_bound and not sigma < sigma_upper_bound(N):
        raise ParameterError(
            f"sigma={sigma} violates sigma < 1/4 - log4/log N = {sigma_upper_bound(N):.6g}",
            bound="sigma < 1/4 - log 4 / log N",
        )
    r_xi = math.sqrt(N)
    if ball.N < r_xi * (1 - 1e-12):
        raise ParameterError(f"ball radius {ball.N} is smaller than N^(1/2) = {r_xi}")
    xi_groups = _grouped(ball, radius_sq(r_xi), lambda w: w[-1])
    pi_groups = _grouped(ball, radius_sq(N ** (0.5 - sigma)), lambda w: w[0])
    if not xi_groups:
        raise DegenerateInputError(f"Xi is empty at N={N}")
    if not pi_groups:
        raise DegenerateInputError(f"Pi is empty at N={N}, sigma={sigma}")
    xi_code = _best(xi_groups)
    if pi_letter is not None:
        pi_code = letter_code(pi_letter)
        if pi_code not in pi_groups:
            raise DegenerateInputError(f"no Pi candidates start with {pi_letter}")
    else:
        pi_code = _best(pi_groups)

    group = ball.group
    xi = [GroupElement(Word.from_codes(ball.words[i]), Mat2Z(*ball.mats[i])) for i in xi_groups[xi_code]]
    prefix_code = None
    pi_idx = pi_groups[pi_code]
    if pi_code == xi_code ^ 1:
        others = [c for c in range(2 * group.rank) if c not in (xi_code, xi_code ^ 1)]
        if not others:
            raise DegenerateInputError("rank-one group: no different letter to prefix Pi with")
        prefix_code = others[0]
        pm = Mat2Z(*group.letter_matrices()[prefix_code])
        pi = [
            GroupElement(Word.from_codes(bytes([prefix_code]) + ball.words[i]), pm @ Mat2Z(*ball.mats[i]))
            for i in pi_idx
        ]
    else:
        pi = [GroupElement(Word.from_codes(ball.words[i]), Mat2Z(*ball.mats[i])) for i in pi_idx]
    return SectorSets(
        xi=xi,
        pi=pi,
        sigma=sigma,
        N=N,
        xi_letter=code_letter(xi_code),
        pi_letter=code_letter(pi_code),
        pi_prefix=code_letter(prefix_code) if prefix_code is not None else None,
        group=group,
    )


# --- desk-scale checks ---------------------------------------------------------


@dataclass
class CheckReport:
    passed: bool
    offenders: list[str]
    detail: dict = field(default_factory=dict)


def check_no_parabolics(ball: Ball) -> CheckReport:
    """Lists elements of trace +-2 other than +-I."""
    bad = []
    for w, (a, b, c, d) in zip(ball.words, ball.mats):
        if abs(a + d) == 2 and (a, b, c, d) not in ((1, 0, 0, 1), (-1, 0, 0, -1)):
            bad.append(format_codes(w, ball.group.labels))
    return CheckReport(not bad, bad, {"checked": len(ball)})


def check_free_desk(ball: Ball) -> CheckReport:
    """Distinct reduced words must give distinct matrices."""
    seen: dict[tuple, bytes] = {}
    collisions = []
    for w, m in zip(ball.words, ball.mats):
        if m in seen:
            labels = ball.group.labels
            collisions.append(f"{format_codes(seen[m], labels)}={format_codes(w, labels)}")
        else:
            seen[m] = w
    return CheckReport(not collisions, collisions,
                       {"words": len(ball), "distinct_matrices": len(seen)})


def ball_csv(ball: Ball) -> str:
    out = io.StringIO()
    out.write("word,a,b,c,d,norm2\n")
    for w, m in zip(ball.word_strings(), ball.mats):
        out.write(f"{w},{m[0]},{m[1]},{m[2]},{m[3]},{_n2(m)}\n")
    return out.getvalue()
