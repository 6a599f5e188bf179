import numpy as np
import pytest

from thetakummer.codes import (
    BUNDLED,
    BinaryCode,
    CodeFormatError,
    ConstructionALattice,
    WorkBudgetExceeded,
    bundled_code,
    format_code,
    lattice_theta_direct,
    load_code,
    macwilliams_holds,
    marginalize,
    parse_code,
    theta_from_shells,
    theta_series_coefficients,
    theta_via_enumerator,
    validate_type2,
    weight_enumerator,
)
from thetakummer.numtheta import PeriodMatrix, random_period_matrix
from thetakummer.polyring import SparsePoly, const_vars


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_codes_are_type2(name):
    code = bundled_code(name)
    assert validate_type2(code).ok
    assert parse_code(format_code(code)) == code


def test_validation_witness():
    v = validate_type2(BinaryCode.from_strings(["11"]))
    assert not v.ok and v.reason == "doubly-even" and v.witness == ("11",)
    v = validate_type2(BinaryCode.from_strings(["1100", "0110"]))
    assert v.reason == "self-orthogonal" and v.witness == ("1100", "0110")
    v = validate_type2(BinaryCode.from_strings(["1111"]))
    assert v.reason == "self-dual"


def test_e8_genus1_enumerator():
    w = weight_enumerator(bundled_code("e8"), 1)
    x, y = (SparsePoly.var(const_vars(1), i) for i in range(2))
    assert w.poly == x**8 + 14 * x**4 * y**4 + y**8


@pytest.mark.parametrize("name, g", [("e8", 2), ("e8", 3), ("d16p", 2), ("golay", 1)])
def test_macwilliams_and_marginal(name, g):
    code = bundled_code(name)
    w = weight_enumerator(code, g)
    assert w.total() == 1 << (code.k * g)
    assert macwilliams_holds(w, code.k)
    if g > 1:
        assert marginalize(w).poly == weight_enumerator(code, g - 1).poly * (1 << code.k)


def test_work_budget():
    with pytest.raises(WorkBudgetExceeded):
        weight_enumerator(bundled_code("golay"), 2, work_budget=2**20)


def test_e8_shells():
    counts = theta_series_coefficients(ConstructionALattice(bundled_code("e8")), 8)
    assert counts[0] == 1 and counts[4] == 240 and counts[8] == 2160
    v = theta_from_shells(counts, 2j)
    w = theta_via_enumerator(weight_enumerator(bundled_code("e8"), 1), PeriodMatrix([[2j]]), 1e-12)
    assert abs(v - w.value) < 1e-9


@pytest.mark.parametrize("name", ["e8", "d16p", "e8e8"])
def test_enumerator_matches_direct_lattice_sum(name):
    code = bundled_code(name)
    lat = ConstructionALattice(code)
    rng = np.random.default_rng(7)
    w = weight_enumerator(code, 1)
    for _ in range(3):
        z = random_period_matrix(1, rng)
        a = theta_via_enumerator(w, z)
        b = lattice_theta_direct(lat, z)
        assert abs(a.value - b.value) <= a.err + b.err


def test_parse_errors_report_position(tmp_path):
    with pytest.raises(CodeFormatError) as exc:
        parse_code("4 1 bad\n1121\n")
    assert exc.value.line == 2 and exc.value.column == 3
    f = tmp_path / "mine.code"
    f.write_text(format_code(bundled_code("e8")))
    assert load_code(str(f)).rows == bundled_code("e8").rows
    assert load_code("data/e8.code").name == "e8"
