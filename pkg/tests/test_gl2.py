import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thinorbit.errors import InputError, ParameterError
from thinorbit.gl2 import (
    Mat2Z,
    ThinGroup,
    Word,
    commutator_family,
    format_codes,
    group_file_text,
    letter_code,
    parse_group_text,
    parse_word,
    reduce_word,
    resolve_group,
    sanov_family,
    word_to_matrix,
)

letters = st.tuples(st.integers(0, 1), st.sampled_from([1, -1]))


def test_reduce_cancellation():
    assert reduce_word([(0, 1), (0, -1)]) == Word(())
    assert reduce_word([(0, 1), (1, 1)]).letters == ((0, 1), (1, 1))
    assert reduce_word([(0, 1), (1, 1), (1, -1), (0, 1)]).letters == ((0, 1), (0, 1))


def test_reduce_rejects_bad_letters():
    with pytest.raises(InputError):
        reduce_word([(0, 2)])
    with pytest.raises(InputError):
        reduce_word([(3, 1)], n_generators=2)


def test_word_to_matrix_examples():
    g = sanov_family(2)
    assert word_to_matrix(Word(()), g) == Mat2Z.identity()
    assert word_to_matrix(parse_word("A", g.labels), g) == Mat2Z(1, 2, 0, 1)
    assert word_to_matrix(parse_word("BA", g.labels), g) == Mat2Z(1, 2, 2, 5)


def test_sanov_generators():
    assert sanov_family(2).generators == (Mat2Z(1, 2, 0, 1), Mat2Z(1, 0, 2, 1))
    assert sanov_family(4).generators == (Mat2Z(1, 4, 0, 1), Mat2Z(1, 0, 4, 1))
    with pytest.raises(ParameterError):
        sanov_family(1)


def test_determinant_enforced():
    with pytest.raises(InputError):
        Mat2Z(1, 1, 1, 1)


def test_generator_inverse_rejected():
    A = Mat2Z(1, 2, 0, 1)
    with pytest.raises(InputError):
        ThinGroup((A, A.inverse()))


def test_operator_norm_matches_numpy():
    import numpy as np

    m = Mat2Z(2, 3, 1, 2)
    assert m.operator_norm() == pytest.approx(np.linalg.norm(np.array([[2, 3], [1, 2]]), 2))


def test_format_and_parse_roundtrip():
    g = sanov_family(3)
    w = parse_word("ABab", g.labels)
    assert format_codes(w.codes(), g.labels) == "ABab"
    assert format_codes(bytes([0, 3]), commutator_family().labels) == "Cd"
    assert format_codes(bytes([0, 3]), ("g1", "g2")) == "g1.g2^-1"
    assert format_codes(b"", g.labels) == ""


def test_group_file_roundtrip(tmp_path):
    g = sanov_family(3)
    path = tmp_path / "g.txt"
    path.write_text(group_file_text(g))
    h = resolve_group(str(path))
    assert h.generators == g.generators
    assert parse_group_text("# c\n1 2 0 1\n\n1 0 2 1\n").generators == sanov_family(2).generators
    with pytest.raises(InputError):
        parse_group_text("1 2 0\n")
    with pytest.raises(InputError):
        resolve_group("no-such-group")


@given(st.lists(letters, max_size=12), st.lists(letters, max_size=12))
@settings(max_examples=200)
def test_reduction_respects_products(u, v):
    g = sanov_family(2)
    lhs = word_to_matrix(reduce_word(u + v), g)
    rhs = word_to_matrix(u, g) @ word_to_matrix(v, g)
    assert lhs == rhs
    assert lhs.det == 1


@given(st.lists(letters, max_size=15))
def test_reduced_words_have_no_cancellation(raw):
    w = reduce_word(raw)
    codes = w.codes()
    assert all(codes[i] != codes[i + 1] ^ 1 for i in range(len(codes) - 1))
    g = sanov_family(3)
    assert word_to_matrix(w * w.inverse(), g).is_identity()
    assert all(letter_code(x) < 4 for x in w)
