import numpy as np
import pytest

from thetakummer.fourier_jacobi import (
    ArgScale,
    AssembledPoly,
    ScaleMismatch,
    SplitPoly,
    assemble_quartic,
    doubling_rewrite,
    extract_quartic_coeffs,
    f8_term,
    fj_numeric,
    fj_pipeline,
    genus3_quartics_from_table,
    materialize_h1,
    mixed_vars,
    phi_image,
    quartic_basis,
    raw_f4,
    split_parts,
    validate_doubling,
    NotInQuarticSpan,
)
from thetakummer.invariants import schottky_poly
from thetakummer.numtheta import EvalPoint, first_order_table, random_period_matrix, random_z, second_order_table
from thetakummer.polyring import SparsePoly, evaluate_certified, split_vars


def test_quartic_bases():
    assert len(quartic_basis(2)) == 5
    assert quartic_basis(3) == genus3_quartics_from_table()


@pytest.mark.parametrize("g", [2, 3])
def test_quartics_translation_invariant(g):
    rng = np.random.default_rng(g)
    tau = random_period_matrix(g, rng)
    z = random_z(g, rng)
    basis = quartic_basis(g)
    base = second_order_table(EvalPoint(tau, z), 1e-12).values
    for shift in ([0.5] + [0] * (g - 1), list(tau.entries[:, 0] / 2)):
        moved = second_order_table(EvalPoint(tau, z + np.array(shift)), 1e-12).values
        ratios = [complex(q.evaluate(list(moved))) / complex(q.evaluate(list(base))) for q in basis]
        assert max(abs(r - ratios[0]) for r in ratios) < 1e-9 * abs(ratios[0])


def test_split_parts_and_phi():
    ctx = split_vars(1)
    p = SparsePoly.var(ctx, 0) ** 2 - SparsePoly.var(ctx, 1) ** 2 + SparsePoly.var(ctx, 2) * SparsePoly.var(ctx, 3)
    sp = SplitPoly(1, p)
    assert [t.index for t in split_parts(sp)] == [0, 1, 2]
    assert len(phi_image(sp)) == 1


def test_scale_flags_refuse_mixing():
    a = raw_f4(SplitPoly(1, SparsePoly.var(split_vars(1), 1) ** 4))
    assert a.scale is ArgScale.HALF
    with pytest.raises(ScaleMismatch):
        a + AssembledPoly(a.poly, ArgScale.FULL)


@pytest.mark.parametrize("g", [1, 2])
def test_numeric_expansion_leading_terms(g):
    rng = np.random.default_rng(20 + g)
    tau = random_period_matrix(g, rng)
    z = random_z(g, rng)
    c0 = second_order_table(EvalPoint(tau, np.zeros(g)), 1e-14).values
    cz = second_order_table(EvalPoint(tau, z), 1e-14).values
    ch = second_order_table(EvalPoint(tau, z / 2), 1e-14).values
    for a in range(2 << g):
        r = fj_numeric(SplitPoly(g, SparsePoly.var(split_vars(g), a)), tau, z, max_order=10)
        want = [0j] * 11
        eps = a >> 1
        if a & 1:
            want[2] = 2 * ch[eps]
        else:
            want[0], want[8] = c0[eps], 2 * cz[eps]
        assert max(abs(c.value - w) for c, w in zip(r.coefficients, want)) < 1e-9


def test_schottky_pipeline_gives_kummer_quartic():
    sp = SplitPoly.lift(schottky_poly("second"))
    assert phi_image(sp).is_zero()
    coeffs = fj_pipeline(sp)
    assert len(coeffs) == 5
    assert all(c.is_homogeneous() and c.degree() == 12 and not c.is_zero() for c in coeffs)
    quartic = assemble_quartic(coeffs, 2)
    rng = np.random.default_rng(0)
    tau = random_period_matrix(2, rng)
    z = random_z(2, rng)
    c0 = second_order_table(EvalPoint(tau, np.zeros(2)), 1e-14)
    cz = second_order_table(EvalPoint(tau, z), 1e-14)
    v = evaluate_certified(quartic.poly, list(c0.values) + list(cz.values), list(c0.errs) + list(cz.errs))
    assert abs(v.value) <= v.err


def test_extract_rejects_non_invariant():
    p = SparsePoly.var(mixed_vars(2), 4) ** 3 * SparsePoly.var(mixed_vars(2), 5)
    with pytest.raises(NotInQuarticSpan):
        extract_quartic_coeffs(AssembledPoly(p, ArgScale.FULL), 2)


@pytest.mark.parametrize("g", [1, 2, 3])
def test_doubling_identity(g):
    validate_doubling(doubling_rewrite((1 << g) - 1, 0, g), samples=3, seed=g)


def test_h1_term_matches_numeric_and_materialization():
    ctx = split_vars(1)
    x = [SparsePoly.var(ctx, i) for i in range(4)]
    p = x[0] ** 3 * x[2] + 2 * x[1] ** 2 * x[3] ** 2 - x[1] ** 4 + x[0] * x[1] * x[2] * x[3]
    sp = SplitPoly(1, p)
    term = f8_term(sp)
    assert not term.h1_is_zero
    rng = np.random.default_rng(9)
    tau = random_period_matrix(1, rng)
    z = random_z(1, rng)
    sym = term.evaluate(tau, z)
    num = fj_numeric(sp, tau, 2 * z).coefficients[8]
    assert abs(sym.value - num.value) <= sym.err + num.err + 1e-12
    numer, denom = materialize_h1(term)
    f0 = first_order_table(EvalPoint(tau, np.zeros(1)), 1e-14)
    c0 = second_order_table(EvalPoint(tau, np.zeros(1)), 1e-14)
    cz = second_order_table(EvalPoint(tau, z), 1e-14)
    vals = [f0[0].value, f0[1].value, *c0.values, *cz.values]
    assert abs(complex(numer.evaluate(vals)) / complex(denom.evaluate(vals)) - sym.value) < 1e-10
