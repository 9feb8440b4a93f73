from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thinorbit.ball import SectorSets, build_sectors, enumerate_ball
from thinorbit.errors import ConfigurationError, InputError
from thinorbit.gl2 import GroupElement, Mat2Z, Word, parse_word, sanov_family
from thinorbit.orbit import (
    OrbitConfig,
    OrbitHistogram,
    exceptional_csv,
    exceptional_set,
    histogram_json,
    histogram_simple,
    histogram_triple,
    inner_value,
    multiplicity_profile,
)

G2 = sanov_family(2)


def element(text, group=G2):
    return GroupElement.from_word(parse_word(text, group.labels), group)


def test_inner_value_examples():
    cfg = OrbitConfig(G2)
    assert inner_value(element(""), cfg) == 1
    assert inner_value(element("BA"), cfg) == 5
    assert inner_value(element("A"), cfg) == 1


def test_primitive_vectors_required():
    with pytest.raises(InputError):
        OrbitConfig(G2, v0=(2, 4))
    with pytest.raises(InputError):
        OrbitConfig(G2, w0=(0, 0))


def test_simple_histogram_radius3():
    h = histogram_simple(enumerate_ball(G2, 3), OrbitConfig(G2))
    assert h.counts == {1: 5} and h.total_mass == 5
    assert h.to_csv() == "n,count\n1,5\n"
    empty = histogram_simple(enumerate_ball(G2, 1.2), OrbitConfig(G2))
    assert empty.counts == {} and empty.total_mass == 0


def test_simple_histogram_matches_loop():
    ball = enumerate_ball(G2, 40)
    cfg = OrbitConfig(G2, (1, 2), (3, -1))
    h = histogram_simple(ball, cfg, witness_cap=50)
    loop = Counter(inner_value(g, cfg) for g in ball)
    assert h.counts == dict(loop)
    assert h.total_mass == len(ball)
    for n, w in h.witnesses.items():
        assert inner_value(element(w), cfg) == n


def triple_loop(sectors, small, cfg):
    out = Counter()
    for g in small:
        for x in sectors.xi:
            for p in sectors.pi:
                out[inner_value(GroupElement(Word(), g.matrix @ x.matrix @ p.matrix), cfg)] += 1
    return out


@pytest.mark.parametrize("N,sigma", [(16.0, 0.12), (64.0, 0.24), (100.0, 0.2)])
def test_triple_matches_loop(N, sigma):
    cfg = OrbitConfig(G2)
    ball = enumerate_ball(G2, N**0.5)
    sectors = build_sectors(ball, sigma, N, check_sigma_bound=False)
    small = enumerate_ball(G2, N**sigma)
    h = histogram_triple(sectors, small, cfg, witness_cap=20)
    assert h.counts == dict(triple_loop(sectors, small, cfg))
    assert h.total_mass == len(sectors.xi) * len(sectors.pi) * len(small)
    for n, w in h.witnesses.items():
        assert inner_value(element(w), cfg) == n


def test_triple_trivial_sets():
    ident = GroupElement(Word(), Mat2Z.identity())
    sectors = SectorSets([ident], [ident], 0.1, 4.0, (0, 1), (0, 1), group=G2)
    small = enumerate_ball(G2, 4.0**0.1)
    small.mats, small.words = [(1, 0, 0, 1)], [b""]
    cfg = OrbitConfig(G2, (1, 1), (2, 3))
    assert histogram_triple(sectors, small, cfg).counts == {5: 1}


def test_triple_configuration_errors():
    cfg = OrbitConfig(G2)
    ball = enumerate_ball(G2, 8)
    sectors = build_sectors(ball, 0.24, 64.0, check_sigma_bound=False)
    with pytest.raises(ConfigurationError):
        histogram_triple(sectors, enumerate_ball(G2, 3.0), cfg)
    G3 = sanov_family(3)
    with pytest.raises(ConfigurationError):
        histogram_triple(sectors, enumerate_ball(G3, 64.0**0.24), OrbitConfig(G3))


@given(st.integers(-3, 3), st.integers(-3, 3), st.floats(3, 30))
@settings(max_examples=30, deadline=None)
def test_negation_symmetry(x, y, N):
    import math

    if (x, y) == (0, 0) or math.gcd(x, y) != 1:
        return
    ball = enumerate_ball(G2, N)
    h = histogram_simple(ball, OrbitConfig(G2, (x, y), (0, 1)))
    hn = histogram_simple(ball, OrbitConfig(G2, (-x, -y), (0, 1)))
    assert hn.counts == h.negated().counts
    assert sum(h.counts.values()) == len(ball)


def test_merge_is_commutative():
    a = OrbitHistogram({1: 2, 3: 1}, 3, {})
    b = OrbitHistogram({3: 4, -1: 1}, 5, {})
    assert (a + b).counts == (b + a).counts == {1: 2, 3: 5, -1: 1}
    assert (a + b).total_mass == 8
    with pytest.raises(ConfigurationError):
        OrbitHistogram({1: 2}, 3, {})


def test_exceptional_set():
    h = OrbitHistogram({1: 1, 3: 2}, 3, {})
    odd = lambda n: n % 2 == 1
    assert exceptional_set(h, odd, 5) == [-3, -1]
    assert exceptional_set(OrbitHistogram({n: 1 for n in range(-9, 10, 2)}, 10, {}), odd, 5) == []
    assert exceptional_csv([-3, -1]) == "n\n-3\n-1\n"


def test_exceptional_shrinks_with_radius():
    G3 = sanov_family(3)
    cfg = OrbitConfig(G3)
    adm = lambda n: n % 3 == 1
    big = enumerate_ball(G3, 2000)
    small_exc = exceptional_set(histogram_simple(big.restrict(200), cfg), adm, 200)
    big_exc = exceptional_set(histogram_simple(big, cfg), adm, 200)
    assert set(big_exc) <= set(small_exc)


def test_multiplicity_profile():
    p = multiplicity_profile(OrbitHistogram({1: 5}, 5, {}), 3)
    assert p.mean == 5 and p.max == 5
    p = multiplicity_profile(OrbitHistogram({n: 7 for n in range(-4, 5)}, 63, {}), 10)
    assert p.mean == 7
    means = [multiplicity_profile(histogram_simple(enumerate_ball(G2, N), OrbitConfig(G2)), N).mean
             for N in (16, 64, 256)]
    assert means[0] < means[1] < means[2]


def test_histogram_json():
    h = histogram_simple(enumerate_ball(G2, 3), OrbitConfig(G2))
    assert '"total_mass": 5' in histogram_json(h, N=3)
