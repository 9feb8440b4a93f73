import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thinorbit import ball as B
from thinorbit.errors import DegenerateInputError, ParameterError, ResourceError
from thinorbit.gl2 import Mat2Z, ThinGroup, Word, commutator_family, sanov_family, word_to_matrix


def brute_ball(group, N, max_len):
    """All reduced words up to max_len, multiplied out one by one."""
    out = set()
    codes = range(2 * group.rank)
    for L in range(max_len + 1):
        for w in itertools.product(codes, repeat=L):
            if any(w[i] == w[i + 1] ^ 1 for i in range(L - 1)):
                continue
            m = word_to_matrix(Word.from_codes(w), group)
            if m.norm2 < N * N:
                out.add((bytes(w), m.as_tuple()))
    return out


def as_set(ball):
    return set(zip(ball.words, ball.mats))


def test_sanov2_radius3():
    b = B.enumerate_ball(sanov_family(2), 3)
    assert len(b) == 5
    assert set(b.word_strings()) == {"", "A", "a", "B", "b"}


def test_radius_sqrt2_is_empty():
    assert len(B.enumerate_ball(sanov_family(2), math.sqrt(2))) == 0
    assert len(B.enumerate_ball(sanov_family(2), math.sqrt(2), "exhaustive_by_length")) == 0
    assert len(B.enumerate_ball(sanov_family(2), 1.5)) == 1


@pytest.mark.parametrize("k,N", [(2, 10), (3, 20), (4, 30), (2, 7.5)])
def test_modes_agree_with_brute_force(k, N):
    g = sanov_family(k)
    ex = B.enumerate_ball(g, N, "exhaustive_by_length")
    oracle = brute_ball(g, N, ex.report["length_bound"])
    assert as_set(ex) == oracle
    assert as_set(B.enumerate_ball(g, N)) == oracle


def test_length_bound_is_not_too_short():
    # A^L has norm^2 = 2 + (kL)^2, the slowest growth along any word
    g = sanov_family(2)
    for N in (5, 10, 17):
        L = B.exhaustive_length_bound(g, N)
        assert word_to_matrix([(0, 1)] * (L + 1), g).norm2 >= N * N
        b = B.enumerate_ball(g, N)
        assert max(len(w) for w in b.words) <= L


def test_dfs_and_array_walk_agree():
    g = sanov_family(3)
    N = 60
    t = B.radius_sq(N)
    C = g.max_operator_norm()
    letters = g.letter_matrices()
    words, mats = [b""], [(1, 0, 0, 1)]
    for code in range(4):
        w, m, _ = B._explore(letters, code, letters[code], t, t * C * C, 10**7)
        words += w
        mats += m
    dfs = B._finish(g, N, words, mats, {})
    arr = B.enumerate_ball(g, N)
    assert dfs.words == arr.words and dfs.mats == arr.mats


def test_ball_sizes_match_enumeration():
    g = sanov_family(2)
    radii = [4.0, 8.0, 16.0, 33.0]
    assert B.ball_sizes(g, radii) == [len(B.enumerate_ball(g, N)) for N in radii]


def test_workers_do_not_change_result():
    g = sanov_family(2)
    assert as_set(B.enumerate_ball(g, 20, workers=3)) == as_set(B.enumerate_ball(g, 20))


def test_element_cap():
    with pytest.raises(ResourceError) as exc:
        B.enumerate_ball(sanov_family(2), 50, cap=100)
    assert exc.value.partial_count > 100


def test_exhaustive_needs_bound_for_general_groups():
    with pytest.raises(ParameterError):
        B.enumerate_ball(commutator_family(), 30, "exhaustive_by_length")
    b = B.enumerate_ball(commutator_family(), 30, "exhaustive_by_length", max_length=2)
    assert len(b) == 5


def test_validation_stamp():
    g, rep = B.validate_pruning(sanov_family(2), 10)
    assert rep["agree"] and "pruning_validated" in g.stamps


@given(st.integers(2, 5), st.floats(2, 40), st.floats(2, 40))
@settings(max_examples=40, deadline=None)
def test_monotone_and_invariants(k, N1, N2):
    lo, hi = sorted((N1, N2))
    g = sanov_family(k)
    small, big = B.enumerate_ball(g, lo), B.enumerate_ball(g, hi)
    assert as_set(small) <= as_set(big)
    assert len(set(big.mats)) == len(big)
    assert all(a * d - b * c == 1 for a, b, c, d in big.mats)
    assert all(n2 < hi * hi for n2 in big.norm2_array().tolist())
    assert (1, 0, 0, 1) in big.mats


def test_restrict():
    b = B.enumerate_ball(sanov_family(2), 30)
    assert as_set(b.restrict(12)) == as_set(B.enumerate_ball(sanov_family(2), 12))
    with pytest.raises(ParameterError):
        b.restrict(40)


# --- sectors -------------------------------------------------------------------------


def test_sectors_pigeonhole():
    g = sanov_family(2)
    N = 36.0
    b = B.enumerate_ball(g, 6)
    s = B.build_sectors(b, 0.1, N, check_sigma_bound=False)
    assert len(s.xi) >= (len(b) - 1) / 4
    assert all(e.matrix.norm < math.sqrt(N) for e in s.xi)
    assert all(e.word.last() == s.xi_letter for e in s.xi)
    starts = {e.word.first() for e in s.pi}
    assert starts == {s.pi_start}
    assert s.pi_start != (s.xi_letter[0], -s.xi_letter[1])


def test_sectors_reprefix():
    g = sanov_family(2)
    b = B.enumerate_ball(g, 6)
    s = B.build_sectors(b, 0.1, 36.0, check_sigma_bound=False)
    inv = (s.xi_letter[0], -s.xi_letter[1])
    t = B.build_sectors(b, 0.1, 36.0, pi_letter=inv, check_sigma_bound=False)
    assert t.pi_prefix is not None and t.pi_prefix not in (s.xi_letter, inv)
    for e in t.pi:
        assert e.word.first() == t.pi_prefix
        assert word_to_matrix(e.word, g) == e.matrix


def test_sector_errors():
    g = sanov_family(2)
    with pytest.raises(ParameterError):
        B.build_sectors(B.enumerate_ball(g, 6), 0.1, 36.0)
    with pytest.raises(DegenerateInputError):
        B.build_sectors(B.enumerate_ball(g, 1.5), 0.1, 2.0, check_sigma_bound=False)
    assert B.sigma_upper_bound(256) == pytest.approx(0.0)


# --- desk checks -----------------------------------------------------------------------


def test_parabolics():
    sanov = B.check_no_parabolics(B.enumerate_ball(sanov_family(2), 10))
    assert not sanov.passed and "A" in sanov.offenders
    assert B.check_no_parabolics(B.enumerate_ball(commutator_family(), 200)).passed
    single = ThinGroup((Mat2Z(1, 2, 0, 1),))
    rep = B.check_no_parabolics(B.enumerate_ball(single, 10, "exhaustive_by_length", max_length=5))
    assert not rep.passed and "A" in rep.offenders
    assert B.check_no_parabolics(B.enumerate_ball(sanov_family(2), 1.5)).passed


def test_free_desk():
    assert B.check_free_desk(B.enumerate_ball(sanov_family(2), 50)).passed
    dup = ThinGroup((Mat2Z(1, 2, 0, 1), Mat2Z(1, 2, 0, 1)))
    assert not B.check_free_desk(B.enumerate_ball(dup, 10, "exhaustive_by_length", max_length=3)).passed
    assert B.check_free_desk(B.enumerate_ball(sanov_family(2), 1.5)).passed


def test_ball_csv():
    text = B.ball_csv(B.enumerate_ball(sanov_family(2), 3))
    lines = text.splitlines()
    assert lines[0] == "word,a,b,c,d,norm2"
    assert lines[1] == ",1,0,0,1,2"
    assert len(lines) == 6
