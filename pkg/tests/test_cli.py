import pytest

from thetakummer.cli import InputError, JobConfig, run


def test_identity_check_t8(capsys):
    assert run(["identity-check", "--id", "t8", "--genus", "2", "--samples", "5"]) == 0
    assert "gate\tresiduals_within_err PASS" in capsys.readouterr().out


def test_wenum_e8(capsys):
    assert run(["wenum", "--code", "data/e8.code", "--genus", "1"]) == 0
    out = capsys.readouterr().out
    assert "terms\t3" in out and "poly\t14/1 4 4" in out


def test_bad_code_file(tmp_path, capsys):
    f = tmp_path / "bad.code"
    f.write_text("4 1 bad\n1x00\n")
    assert run(["wenum", "--code", str(f)]) == 2
    assert "line 2, column 2" in capsys.readouterr().err


def test_invariant_basis(capsys):
    assert run(["invariant-basis", "--format", "text"]) == 0
    assert "elements: 6" in capsys.readouterr().out


def test_work_budget_floor():
    with pytest.raises(InputError):
        JobConfig("wenum", work_budget=100)
    with pytest.raises(InputError):
        JobConfig("wenum", target_err=0)


def test_divide_and_membership(tmp_path, capsys):
    from thetakummer.polyring import SparsePoly, const_vars

    ctx = const_vars(1)
    x0, x1 = SparsePoly.var(ctx, 0), SparsePoly.var(ctx, 1)
    (tmp_path / "n.txt").write_text((x0**2 - x1**2).to_text())
    (tmp_path / "d.txt").write_text((x0 - x1).to_text())
    assert run(["divide", "--numerator", str(tmp_path / "n.txt"), "--divisor", str(tmp_path / "d.txt")]) == 0
    (tmp_path / "g1.txt").write_text((x0**2).to_text({"name": "a"}))
    (tmp_path / "g2.txt").write_text((x1**2).to_text({"name": "b"}))
    assert run(["membership", "--target", str(tmp_path / "n.txt"),
                "--gen", str(tmp_path / "g1.txt"), "--gen", str(tmp_path / "g2.txt")]) == 0
    out = capsys.readouterr().out
    assert "coef\ta 1/1" in out and "coef\tb -1/1" in out


def test_cache_matches_cold_run(tmp_path, capsys):
    argv = ["theta-eval", "--genus", "2", "--random-z", "--seed", "4", "--cache-dir", str(tmp_path)]
    assert run(argv) == 0
    cold = capsys.readouterr().out
    assert list(tmp_path.rglob("*.txt"))
    assert run(argv) == 0
    assert capsys.readouterr().out == cold


def test_relation_check(capsys):
    assert run(["relation-check"]) == 0
    out = capsys.readouterr().out
    assert "gate\tround_trip PASS" in out and "conditional\tskipped" in out
