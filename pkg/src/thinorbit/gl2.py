"""Exact SL(2, Z) arithmetic, free words and generator sets.

Letters are pairs ``(generator index, exponent)`` with exponent ``+1`` or
``-1``. Internally a letter is also packed into a small integer code
``2*index + (exponent < 0)`` so that the inverse letter is ``code ^ 1``;
balls store words as ``bytes`` of such codes.

Python integers are arbitrary precision, so matrix products never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import reduce
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InputError, ParameterError

Letter = tuple[int, int]


@dataclass(frozen=True, slots=True)
class Mat2Z:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise InputError(f"determinant of {self.as_tuple()} is not 1")

    @classmethod
    def identity(cls) -> Mat2Z:
        return cls(1, 0, 0, 1)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def __matmul__(self, other: Mat2Z) -> Mat2Z:
        a, b, c, d = self.as_tuple()
        e, f, g, h = other.as_tuple()
        return Mat2Z(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> Mat2Z:
        return Mat2Z(self.d, -self.b, -self.c, self.a)

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> int:
        return self.a + self.d

    @property
    def norm2(self) -> int:
        """Squared Frobenius norm a^2 + b^2 + c^2 + d^2."""
        return self.a**2 + self.b**2 + self.c**2 + self.d**2

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm2)

    def operator_norm(self) -> float:
        # largest singular value; det = 1 so s_max * s_min = 1
        n2 = self.norm2
        return math.sqrt((n2 + math.sqrt(n2 * n2 - 4)) / 2)

    def is_identity(self) -> bool:
        return self.as_tuple() == (1, 0, 0, 1)

    def mod(self, q: int) -> tuple[int, int, int, int]:
        return (self.a % q, self.b % q, self.c % q, self.d % q)


def letter_code(letter: Letter) -> int:
    i, e = letter
    return 2 * i + (e < 0)


def code_letter(code: int) -> Letter:
    return (code >> 1, -1 if code & 1 else 1)


@dataclass(frozen=True, slots=True)
class Word:
    """A freely reduced word; construct through :func:`reduce_word`."""

    letters: tuple[Letter, ...] = ()

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    @classmethod
    def from_codes(cls, codes: bytes | Sequence[int]) -> Word:
        return cls(tuple(code_letter(c) for c in codes))

    def codes(self) -> bytes:
        return bytes(letter_code(x) for x in self.letters)

    def inverse(self) -> Word:
        return Word(tuple((i, -e) for i, e in reversed(self.letters)))

    def first(self) -> Letter | None:
        return self.letters[0] if self.letters else None

    def last(self) -> Letter | None:
        return self.letters[-1] if self.letters else None

    def __mul__(self, other: Word) -> Word:
        return reduce_word(self.letters + other.letters)

    def format(self, labels: Sequence[str]) -> str:
        return format_codes(self.codes(), labels)


def format_codes(codes: bytes, labels: Sequence[str]) -> str:
    """Render a word: uppercase label for a generator, lowercase for its inverse.

    Labels that are not single uppercase letters get a ``^-1`` suffix instead,
    joined with dots. The empty word renders as the empty string.
    """
    simple = all(len(lab) == 1 and lab.isupper() for lab in labels)
    parts = []
    for c in codes:
        lab = labels[c >> 1]
        if c & 1:
            lab = lab.lower() if simple else lab + "^-1"
        parts.append(lab)
    return ("" if simple else ".").join(parts)


def parse_word(text: str, labels: Sequence[str]) -> Word:
    """Inverse of :func:`format_codes` for single-letter labels."""
    index = {lab: i for i, lab in enumerate(labels)}
    letters = []
    for ch in text.strip():
        if ch in index:
            letters.append((index[ch], 1))
        elif ch.upper() in index and ch.islower():
            letters.append((index[ch.upper()], -1))
        else:
            raise InputError(f"unknown letter {ch!r} in word {text!r}")
    return reduce_word(letters)


def reduce_word(letters: Iterable[Letter], n_generators: int | None = None) -> Word:
    """Free reduction with a stack; ``n_generators`` enables index validation."""
    out: list[Letter] = []
    for letter in letters:
        i, e = letter
        if e not in (1, -1) or i < 0 or (n_generators is not None and i >= n_generators):
            raise InputError(f"invalid letter {letter!r}")
        if out and out[-1] == (i, -e):
            out.pop()
        else:
            out.append((i, e))
    return Word(tuple(out))


@dataclass(frozen=True)
class ThinGroup:
    """Finitely generated subgroup of SL(2, Z) given by generators.

    ``sanov_k`` is set for the Sanov family and unlocks the ping-pong word
    length bound used by exhaustive enumeration. ``stamps`` records
    desk-scale verifications (``free_at_scale``, ``no_parabolics_at_scale``,
    ``pruning_validated``) and does not take part in equality.
    """

    generators: tuple[Mat2Z, ...]
    labels: tuple[str, ...] = ()
    name: str = ""
    sanov_k: int | None = None
    stamps: frozenset[str] = field(default=frozenset(), compare=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise InputError("generator list is empty")
        object.__setattr__(self, "generators", gens)
        if not self.labels:
            if len(gens) > 26:
                raise InputError("more than 26 generators need explicit labels")
            object.__setattr__(self, "labels", tuple(chr(ord("A") + i) for i in range(len(gens))))
        elif len(self.labels) != len(gens):
            raise InputError("labels and generators differ in length")
        for i, g in enumerate(gens):
            for j, h in enumerate(gens):
                if g == h.inverse():
                    raise InputError(f"generator {i} equals the inverse of generator {j}")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def letter_matrices(self) -> list[tuple[int, int, int, int]]:
        """Matrices indexed by letter code (generator, inverse, generator, ...)."""
        out = []
        for g in self.generators:
            out.append(g.as_tuple())
            out.append(g.inverse().as_tuple())
        return out

    def max_operator_norm(self) -> float:
        return max(g.operator_norm() for g in self.generators)

    def with_stamp(self, *stamps: str) -> ThinGroup:
        return replace(self, stamps=self.stamps | frozenset(stamps))

    def spec(self) -> str:
        return self.name or "file"


def word_to_matrix(word: Word | Iterable[Letter], group: ThinGroup) -> Mat2Z:
    mats = []
    for i, e in word:
        if not 0 <= i < group.rank:
            raise InputError(f"generator index {i} out of range for rank {group.rank}")
        g = group.generators[i]
        mats.append(g if e > 0 else g.inverse())
    return reduce(Mat2Z.__matmul__, mats, Mat2Z.identity())


@dataclass(frozen=True)
class GroupElement:
    word: Word
    matrix: Mat2Z

    @classmethod
    def from_word(cls, word: Word, group: ThinGroup) -> GroupElement:
        return cls(word, word_to_matrix(word, group))


def sanov_family(k: int) -> ThinGroup:
    """Group generated by [[1,k],[0,1]] and [[1,0],[k,1]]; free for k >= 2."""
    if int(k) != k or k < 2:
        raise ParameterError(f"Sanov parameter must be an integer >= 2, got {k}", bound="k >= 2")
    k = int(k)
    return ThinGroup(
        (Mat2Z(1, k, 0, 1), Mat2Z(1, 0, k, 1)),
        labels=("A", "B"),
        name=f"sanov:{k}",
        sanov_k=k,
    )


def commutator_family(k: int = 2) -> ThinGroup:
    """Two commutators [A,B] and [A,B^-1] of the Sanov generators.

    For k = 2 these lie in the commutator subgroup of Gamma(2), whose only
    element of trace +-2 is the identity, so the group has no parabolics.
    """
    sanov = sanov_family(k)
    A, B = sanov.generators
    Ai, Bi = A.inverse(), B.inverse()
    return ThinGroup(
        (A @ B @ Ai @ Bi, A @ Bi @ Ai @ B),
        labels=("C", "D"),
        name=f"commutator:{k}",
    )


def parse_group_text(text: str, name: str = "") -> ThinGroup:
    """Plain text, one generator per line as ``a b c d``; ``#`` lines ignored."""
    gens = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise InputError(f"line {lineno}: expected four integers, got {line!r}")
        try:
            gens.append(Mat2Z(*(int(p) for p in parts)))
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from exc
    return ThinGroup(tuple(gens), name=name)


def load_group_file(path: str | Path) -> ThinGroup:
    path = Path(path)
    return parse_group_text(path.read_text(), name=f"file:{path.name}")


def group_file_text(group: ThinGroup) -> str:
    lines = [f"# {group.spec()}"]
    lines += [" ".join(str(x) for x in g.as_tuple()) for g in group.generators]
    return "\n".join(lines) + "\n"


def resolve_group(spec: str) -> ThinGroup:
    """``sanov:k``, ``commutator:k`` or a path to a group file."""
    if spec.startswith("sanov:"):
        return sanov_family(int(spec.split(":", 1)[1]))
    if spec.startswith("commutator:"):
        return commutator_family(int(spec.split(":", 1)[1]))
    path = Path(spec)
    if not path.exists():
        raise InputError(f"unknown group spec {spec!r}")
    return load_group_file(path)
