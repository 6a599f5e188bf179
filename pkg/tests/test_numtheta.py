import numpy as np
import pytest

from thetakummer.charspace import Characteristic, HalfChar
from thetakummer.numtheta import (
    Add,
    CertifiedComplex,
    EvalPoint,
    PeriodMatrix,
    PrecisionError,
    ProdTT,
    Riem,
    T8,
    identity_residual,
    parse_identity,
    random_period_matrix,
    random_z,
    second_order_table,
    theta_abs_bound,
    theta_first,
    theta_second,
)


def test_reference_values_at_i():
    p = EvalPoint(PeriodMatrix([[1j]]), np.zeros(1))
    t = theta_first(Characteristic(1, 0, 0), p, 1e-14)
    assert abs(t.value - 1.0864348112133080) < 1e-13
    big = theta_second(HalfChar(1, 0), p, 1e-14)
    assert abs(big.value - 1.0037348854877390) < 1e-13


def test_odd_theta_constant_vanishes():
    rng = np.random.default_rng(0)
    tau = random_period_matrix(2, rng)
    t = theta_first(Characteristic(2, 1, 1), EvalPoint(tau, np.zeros(2)), 1e-12)
    assert t.contains(0)


def test_period_matrix_validation():
    with pytest.raises(ValueError):
        PeriodMatrix([[1j, 0.1], [0.2, 1j]])
    with pytest.raises(ValueError):
        PeriodMatrix([[-1j]])


def test_random_points_are_positive_definite():
    rng = np.random.default_rng(1)
    for g in (1, 2, 3, 4):
        assert random_period_matrix(g, rng).min_eigenvalue > 0


def test_certified_arithmetic_contains_exact():
    a = CertifiedComplex(1.0 + 1e-12, 2e-12)
    b = CertifiedComplex(2.0, 1e-12)
    assert (a * b).contains(2.0)
    assert (a - 1).contains(0)


@pytest.mark.parametrize("g", [1, 2, 3])
def test_catalogued_identities(g):
    rng = np.random.default_rng(10 + g)
    for _ in range(2):
        p = EvalPoint(random_period_matrix(g, rng), random_z(g, rng))
        for ident in parse_identity("riem", g) + parse_identity("tt", g) + parse_identity("add", g) + [T8()]:
            r = identity_residual(ident, p, 1e-10)
            assert abs(r.value) <= r.err <= 1e-10


def test_parse_identity_single():
    assert parse_identity("riem:10,01", 2) == [Riem(1, 2)]
    assert parse_identity("add:1,1", 1) == [Add(1, 1)]
    assert parse_identity("tt", 1) == [ProdTT(a, b) for a in range(2) for b in range(2)]
    with pytest.raises(ValueError):
        parse_identity("nope", 2)


def test_precision_error_on_impossible_target():
    p = EvalPoint(PeriodMatrix([[1j]]), np.zeros(1))
    with pytest.raises(PrecisionError):
        identity_residual(T8(), p, 1e-30)


def test_abs_bound_dominates():
    rng = np.random.default_rng(3)
    tau = random_period_matrix(2, rng)
    bound = theta_abs_bound(tau.imag, True)
    tab = second_order_table(EvalPoint(tau, np.zeros(2)), 1e-12)
    assert max(abs(v) for v in tab.values) <= bound
