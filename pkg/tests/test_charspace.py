import pytest
from hypothesis import given, strategies as st

from thetakummer.charspace import (
    AffineMap,
    Characteristic,
    CharFilter,
    Parity,
    affine_permutations,
    dot,
    enumerate_affine_group,
    enumerate_chars,
    enumerate_gl,
    even_count,
    gl_order,
    odd_count,
    str_to_word,
    word_to_str,
)


def test_bit_convention():
    assert str_to_word("001") == 4
    assert word_to_str(4, 3) == "001"
    assert word_to_str(1, 3) == "100"


@given(st.integers(1, 6).flatmap(lambda g: st.tuples(st.just(g), st.integers(0, (1 << g) - 1))))
def test_word_string_round_trip(gw):
    g, w = gw
    assert str_to_word(word_to_str(w, g)) == w


@pytest.mark.parametrize("g, even, odd", [(1, 3, 1), (2, 10, 6), (3, 36, 28), (4, 136, 120)])
def test_parity_counts(g, even, odd):
    assert len(enumerate_chars(g, CharFilter.EVEN)) == even == even_count(g)
    assert len(enumerate_chars(g, "odd")) == odd == odd_count(g)


def test_characteristic_index_and_parity():
    m = Characteristic.from_str("110", "100")
    assert m.parity is Parity.ODD
    assert enumerate_chars(3)[m.index] == m
    assert str(m) == "[110,100]"


def test_bad_word_rejected():
    with pytest.raises(ValueError):
        Characteristic(2, 4, 0)
    with pytest.raises(ValueError):
        str_to_word("012")


@pytest.mark.parametrize("g", [1, 2, 3])
def test_group_orders(g):
    assert len(enumerate_gl(g)) == gl_order(g)
    assert len(affine_permutations(g)) == gl_order(g) << g


def test_agl3_order():
    assert len(enumerate_affine_group(3)) == 1344


@given(st.integers(0, 7), st.integers(0, 7), st.integers(0, 7))
def test_dot_bilinear(a, b, c):
    assert dot(a ^ b, c) == dot(a, c) ^ dot(b, c)


def test_affine_compose():
    gl = enumerate_gl(3)
    f = AffineMap(gl[5], 3)
    h = AffineMap(gl[17], 6)
    fh = f.compose(h)
    assert all(fh(x) == f(h(x)) for x in range(8))
    with pytest.raises(ValueError):
        AffineMap((1, 1, 0), 0)
