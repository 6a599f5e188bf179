import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from thetakummer.polyring import (
    I,
    ContextMismatch,
    GaussianRational,
    NotHomogeneous,
    SparsePoly,
    VarIndex,
    const_vars,
    divide_exact,
    format_coefficient,
    func_vars,
    parse_coefficient,
    partial_derivative,
    span_membership,
    split_vars,
    substitute_linear,
)

CTX = const_vars(2)

coef = st.fractions(min_value=-20, max_value=20, max_denominator=12)
exps = st.tuples(*[st.integers(0, 3)] * 4)
QUARTIC_EXPS = [e for e in itertools.product(range(5), repeat=4) if sum(e) == 4]
polys = st.dictionaries(exps, coef, max_size=6).map(lambda t: SparsePoly(CTX, t))


def x(i):
    return SparsePoly.var(CTX, i)


def test_variable_names_round_trip():
    for ctx in (const_vars(3), func_vars(2), split_vars(1)):
        for v in ctx:
            assert VarIndex.parse(v.name) == v


def test_coefficient_format():
    assert format_coefficient(Fraction(-3, 4)) == "-3/4"
    c = GaussianRational(Fraction(1, 2), -2)
    assert parse_coefficient(format_coefficient(c)) == c
    assert I * I == -1


@given(polys, polys, polys)
def test_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    assert a - a == SparsePoly.zero(CTX)


@given(polys)
def test_text_round_trip(p):
    q, headers = SparsePoly.from_text(p.to_text({"name": "p"}))
    assert q == p and headers == {"name": "p"}


@given(polys, st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False), min_size=4, max_size=4))
def test_evaluate_is_homomorphism(p, vals):
    q = p * p + 3
    assert abs(complex(q.evaluate(vals)) - (complex(p.evaluate(vals)) ** 2 + 3)) <= 1e-6 * (
        1 + abs(complex(q.evaluate(vals))))


def test_context_mismatch():
    with pytest.raises(ContextMismatch):
        x(0) + SparsePoly.var(func_vars(2), 0)


def test_substitute_linear_composes():
    a = [[1, 1, 0, 0], [1, -1, 0, 0], [0, 0, 1, 1], [0, 0, 1, -1]]
    p = x(0) ** 3 * x(1) + x(2) * x(3) ** 2
    twice = substitute_linear(substitute_linear(p, a), a)
    assert twice == SparsePoly(CTX, {e: c * 2 ** sum(e) for e, c in p.terms.items()})


def test_partial_derivative():
    p = x(0) ** 3 * x(1) + 5 * x(1)
    assert partial_derivative(p, 0) == 3 * x(0) ** 2 * x(1)
    assert partial_derivative(p, CTX[1]) == x(0) ** 3 + 5


def test_span_membership_simple():
    g1, g2 = x(0) ** 2, x(0) * x(1)
    r = span_membership(3 * g1 + g2, [g1, g2])
    assert r.coefficients == [3, 1]
    bad = span_membership(x(1) ** 2, [g1, g2])
    assert not bad.in_span and bad.residual == x(1) ** 2


def test_span_membership_rejects_mixed_degrees():
    with pytest.raises(NotHomogeneous):
        span_membership(x(0), [x(0) ** 2])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.dictionaries(st.sampled_from(QUARTIC_EXPS), coef,
                                 min_size=1, max_size=5), min_size=1, max_size=5),
       st.lists(coef, min_size=5, max_size=5))
def test_span_membership_construct_then_solve(gen_terms, cs):
    gens = [SparsePoly(CTX, t) for t in gen_terms]
    gens = [g for g in gens if g]
    if not gens:
        return
    target = SparsePoly.zero(CTX)
    for c, g in zip(cs, gens):
        target = target + g * c
    r = span_membership(target, gens)
    assert r.in_span
    back = SparsePoly.zero(CTX)
    for c, g in zip(r.coefficients, gens):
        back = back + g * c
    assert back == target


@given(polys.filter(bool), polys.filter(bool))
def test_divide_exact_product(a, b):
    q, r = divide_exact(a * b, a)
    assert r.is_zero() and q == b


def test_divide_with_remainder():
    q, r = divide_exact(x(0) ** 2 + x(1) ** 2, x(0) - x(1))
    assert not r.is_zero()
    assert q * (x(0) - x(1)) + r == x(0) ** 2 + x(1) ** 2
