"""Command line front end.

Every subcommand emits one record per line.  ``--format lines`` (the default)
writes ``key<TAB>value`` records for diffing; ``--format text`` writes
``key: value``.  Exit status is 1 when a gate fails and 2 on bad input.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .numtheta import CertifiedComplex, PrecisionError

DEFAULT_TARGET_ERR = 1e-10
DEFAULT_WORK_BUDGET = 2**32
MIN_WORK_BUDGET = 2**16


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class JobConfig:
    subcommand: str
    inputs: tuple[str, ...] = ()
    genus: int | None = None
    target_err: float = DEFAULT_TARGET_ERR
    work_budget: int = DEFAULT_WORK_BUDGET
    seed: int = 0
    cache_dir: str | None = None
    output_format: str = "lines"
    options: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.target_err > 0:
            raise InputError("target_err must be positive")
        if self.work_budget < MIN_WORK_BUDGET:
            raise InputError(f"work_budget must be at least {MIN_WORK_BUDGET}")
        if self.output_format not in ("text", "lines"):
            raise InputError("format must be text or lines")

    def cache_key(self) -> str:
        h = hashlib.sha256()
        h.update(__version__.encode())
        for part in (self.subcommand, repr(self.genus), repr(self.target_err), repr(self.work_budget),
                     repr(self.seed), self.output_format, repr(self.options)):
            h.update(part.encode() + b"\0")
        for path in self.inputs:
            p = Path(path)
            h.update(p.read_bytes() if p.is_file() else path.encode())
            h.update(b"\0")
        return h.hexdigest()


@dataclass
class Report:
    records: list[tuple[str, str]] = field(default_factory=list)
    failed: bool = False

    def add(self, key: str, *values) -> None:
        self.records.append((key, " ".join(_fmt(v) for v in values)))

    def gate(self, name: str, ok: bool) -> None:
        self.add("gate", name, "PASS" if ok else "FAIL")
        if not ok:
            self.failed = True

    def render(self, output_format: str) -> str:
        sep = "\t" if output_format == "lines" else ": "
        return "".join(f"{k}{sep}{v}\n" for k, v in self.records)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    if isinstance(v, CertifiedComplex):
        return f"{_fmt(v.value)} {_fmt(v.err)}"
    return str(v)


# --- helpers -----------------------------------------------------------------


def _parse_matrix(text: str):
    from .numtheta import PeriodMatrix

    try:
        rows = [[complex(x.replace(" ", "")) for x in row.split(",")] for row in text.split(";")]
        return PeriodMatrix(np.array(rows, dtype=complex))
    except ValueError as exc:
        raise InputError(f"bad period matrix {text!r}: {exc}") from None


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([complex(x.replace(" ", "")) for x in text.split(",")], dtype=complex)
    except ValueError as exc:
        raise InputError(f"bad vector {text!r}: {exc}") from None


def _read_poly(path: str):
    from .polyring import SparsePoly

    try:
        return SparsePoly.from_text(Path(path).read_text())
    except OSError as exc:
        raise InputError(str(exc)) from None
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _rng(cfg: JobConfig) -> np.random.Generator:
    return np.random.default_rng(cfg.seed)


def _opt(cfg: JobConfig, key: str, default=None):
    return dict(cfg.options).get(key, default)


# --- subcommands -------------------------------------------------------------


def cmd_theta_eval(cfg: JobConfig, rep: Report) -> None:
    from .charspace import word_to_str
    from .numtheta import EvalPoint, first_order_table, random_period_matrix, random_z, second_order_table

    rng = _rng(cfg)
    tau_text = _opt(cfg, "tau")
    if tau_text:
        tau = _parse_matrix(tau_text)
    else:
        tau = random_period_matrix(cfg.genus or 1, rng)
    g = tau.genus
    z_text = _opt(cfg, "z")
    z = _parse_vector(z_text) if z_text else (random_z(g, rng) if _opt(cfg, "random_z") == "1" else np.zeros(g))
    p = EvalPoint(tau, z)
    rep.add("genus", g)
    first = first_order_table(p, cfg.target_err)
    for idx in range(len(first)):
        e, d = idx >> g, idx & ((1 << g) - 1)
        rep.add("theta", word_to_str(e, g), word_to_str(d, g), first[idx])
    second = second_order_table(p, cfg.target_err)
    for e in range(len(second)):
        rep.add("Theta", word_to_str(e, g), second[e])
    rep.gate("target_err", max(first.errs) <= cfg.target_err and max(second.errs) <= cfg.target_err)


def cmd_identity_check(cfg: JobConfig, rep: Report) -> None:
    from .numtheta import EvalPoint, ThetaCache, identity_residual, parse_identity, random_period_matrix, random_z

    g = cfg.genus or 1
    samples = int(_opt(cfg, "samples", "50"))
    names = _opt(cfg, "id", "riem").split("+")
    rng = _rng(cfg)
    idents = []
    for name in names:
        idents += parse_identity(name, g)
    worst_ratio = 0.0
    worst_err = 0.0
    ok = True
    for _ in range(samples):
        p = EvalPoint(random_period_matrix(g, rng), random_z(g, rng))
        cache = ThetaCache(p, cfg.target_err)
        for ident in idents:
            r = identity_residual(ident, p, cfg.target_err, cache)
            ok &= abs(r.value) <= r.err
            worst_ratio = max(worst_ratio, abs(r.value) / r.err if r.err else 0.0)
            worst_err = max(worst_err, r.err)
    rep.add("genus", g)
    rep.add("identities", len(idents))
    rep.add("samples", samples)
    rep.add("worst_ratio", worst_ratio)
    rep.add("worst_err", worst_err)
    rep.gate("residuals_within_err", ok)


def cmd_wenum(cfg: JobConfig, rep: Report) -> None:
    from .codes import macwilliams_holds, validate_type2, weight_enumerator

    code = _load_code(cfg)
    g = cfg.genus or 1
    w = weight_enumerator(code, g, cfg.work_budget)
    v = validate_type2(code)
    rep.add("code", code.name, code.n, code.k)
    rep.add("type2", v.ok, v.reason or "-")
    rep.add("terms", len(w.poly))
    rep.add("total", w.total())
    for line in w.poly.to_text().splitlines():
        rep.add("poly", line)
    if v.ok and g <= 3:
        rep.gate("macwilliams", macwilliams_holds(w, code.k))


def _load_code(cfg: JobConfig):
    from .codes import CodeFormatError, load_code

    if not cfg.inputs:
        raise InputError("--code is required")
    try:
        return load_code(cfg.inputs[0])
    except CodeFormatError as exc:
        raise InputError(str(exc)) from None
    except (OSError, KeyError) as exc:
        raise InputError(f"cannot load code {cfg.inputs[0]!r}: {exc}") from None


def cmd_lattice_theta(cfg: JobConfig, rep: Report) -> None:
    from .codes import ConstructionALattice, lattice_theta_direct, theta_via_enumerator, weight_enumerator
    from .numtheta import random_period_matrix

    code = _load_code(cfg)
    g = cfg.genus or 1
    samples = int(_opt(cfg, "samples", "5"))
    lat = ConstructionALattice(code)
    w = weight_enumerator(code, g, cfg.work_budget)
    rng = _rng(cfg)
    ok = True
    for i in range(samples):
        z = random_period_matrix(g, rng)
        a = theta_via_enumerator(w, z, cfg.target_err)
        b = lattice_theta_direct(lat, z, cfg.target_err, cfg.work_budget)
        agree = abs(a.value - b.value) <= a.err + b.err
        ok &= agree
        rep.add("point", i, a, b, agree)
    rep.gate("enumerator_matches_lattice", ok)


def cmd_invariant_basis(cfg: JobConfig, rep: Report) -> None:
    from .invariants import LEMMA_STRINGS, invariant_basis, multiplicity_string

    g = cfg.genus or 3
    degree = int(_opt(cfg, "degree", "12"))
    basis = invariant_basis(g, degree)
    rep.add("genus", g)
    rep.add("degree", degree)
    rep.add("elements", len(basis))
    strings = []
    for p in basis:
        s = multiplicity_string(next(iter(p.terms)))
        strings.append(s)
        rep.add("orbit", "-".join(map(str, s)), len(p))
    if g == 3 and degree == 12:
        rep.gate("lemma_strings", strings == [multiplicity_string(x) for x in LEMMA_STRINGS])


def cmd_schottky(cfg: JobConfig, rep: Report) -> None:
    from .codes import bundled_code, theta_via_enumerator, weight_enumerator
    from .invariants import schottky_poly
    from .numtheta import EvalPoint, random_period_matrix, second_order_table
    from .polyring import evaluate_certified

    samples = int(_opt(cfg, "samples", "20"))
    s = schottky_poly("second")
    rep.add("terms", len(s))
    rep.add("degree", s.degree())
    w1 = weight_enumerator(bundled_code("d16p"), 3, cfg.work_budget)
    w2 = weight_enumerator(bundled_code("e8e8"), 3, cfg.work_budget)
    rep.gate("code_difference_exact", w1.poly - w2.poly == s)
    rng = _rng(cfg)
    vanish = match = True
    for i in range(samples):
        tau = random_period_matrix(3, rng)
        t = second_order_table(EvalPoint(tau, np.zeros(3)), cfg.target_err * 1e-4)
        v = evaluate_certified(s, list(t.values), list(t.errs))
        diff = theta_via_enumerator(w1, tau, cfg.target_err) - theta_via_enumerator(w2, tau, cfg.target_err)
        vanish &= abs(v.value) <= max(v.err, 0.0) and v.err <= 1e-9
        match &= abs(v.value - diff.value) <= v.err + diff.err
        rep.add("point", i, v, diff)
    rep.gate("vanishes", vanish)
    rep.gate("equals_lattice_difference", match)


def cmd_fj_pipeline(cfg: JobConfig, rep: Report) -> None:
    from .fourier_jacobi import (
        SplitPoly,
        assemble_quartic,
        f8_term,
        fj_numeric,
        fj_pipeline,
        split_parts,
    )
    from .invariants import schottky_poly
    from .numtheta import EvalPoint, random_period_matrix, random_z, second_order_table
    from .polyring import evaluate_certified

    if cfg.inputs:
        poly, _ = _read_poly(cfg.inputs[0])
    else:
        poly = schottky_poly("second")
    sp = SplitPoly.lift(poly)
    g = sp.base_genus
    for part in split_parts(sp):
        rep.add("part", part.index, len(part.poly))
    term = f8_term(sp)
    rep.add("h1_terms", sum(len(d) for _, d in term.h1))
    coeffs = fj_pipeline(sp)
    for j, c in enumerate(coeffs, start=1):
        rep.add("coefficient", j, len(c), c.degree() if c.terms else -1)
    quartic = assemble_quartic(coeffs, g)
    samples = int(_opt(cfg, "samples", "10"))
    numeric = int(_opt(cfg, "numeric", "2"))
    rng = _rng(cfg)
    vanish = agree = True
    for i in range(samples):
        tau = random_period_matrix(g, rng)
        z = random_z(g, rng)
        c0 = second_order_table(EvalPoint(tau, np.zeros(g)), 1e-14)
        cz = second_order_table(EvalPoint(tau, z), 1e-14)
        v = evaluate_certified(quartic.poly, list(c0.values) + list(cz.values), list(c0.errs) + list(cz.errs))
        vanish &= abs(v.value) <= v.err
        rep.add("quartic", i, v)
        if i < numeric:
            sym = term.evaluate(tau, z)
            num = fj_numeric(sp, tau, 2 * z, max_order=8, target_err=1e-8).coefficients[8]
            ok = abs(sym.value - num.value) <= max(1e-8, sym.err + num.err)
            agree &= ok
            rep.add("q8", i, sym, num)
    rep.gate("quartic_vanishes", vanish)
    rep.gate("symbolic_matches_numeric", agree)


def cmd_coble_s1(cfg: JobConfig, rep: Report) -> None:
    from .coble import PINNED_S1_TERMS, is_canonical_fixed_point, s1_numeric, s1_theta2_poly
    from .numtheta import EvalPoint, random_period_matrix, second_order_table
    from .polyring import evaluate_certified

    p = s1_theta2_poly()
    if _opt(cfg, "symbolic") == "1":
        rep.add("terms", len(p))
        rep.add("degree", p.degree())
        rep.add("canonical_fixed_point", is_canonical_fixed_point(p))
        rep.add("pinned_terms", PINNED_S1_TERMS)
        rep.gate("term_count_pin", len(p) == PINNED_S1_TERMS)
    samples = int(_opt(cfg, "samples", "20"))
    rng = _rng(cfg)
    ok = True
    for i in range(samples):
        tau = random_period_matrix(3, rng)
        a = s1_numeric(tau, cfg.target_err)
        t = second_order_table(EvalPoint(tau, np.zeros(3)), 1e-14)
        b = evaluate_certified(p, list(t.values), list(t.errs))
        agree = abs(a.value - b.value) <= a.err + b.err
        ok &= agree
        rep.add("point", i, a, b)
    rep.gate("numeric_cross_check", ok)


def cmd_membership(cfg: JobConfig, rep: Report) -> None:
    from .coble import membership_report

    if len(cfg.inputs) < 2:
        raise InputError("membership needs --target and at least one --gen")
    target, _ = _read_poly(cfg.inputs[0])
    gens = []
    for path in cfg.inputs[1:]:
        poly, headers = _read_poly(path)
        gens.append((headers.get("name", Path(path).stem), poly))
    r = membership_report(target, gens)
    for line in r.lines():
        k, _, v = line.partition(" ")
        rep.add(k, v)
    rep.gate("in_span", r.in_span)


def cmd_relation_check(cfg: JobConfig, rep: Report) -> None:
    from .coble import combine_relation, format_relations, parse_relations, relation_tables
    from .codes import WeightEnumerator
    from .numtheta import random_period_matrix

    tables = relation_tables()
    rep.gate("round_trip", parse_relations(format_relations(tables)) == tables)
    by = {t.name: t for t in tables}
    rep.gate("Rt2_C1", by["Rt2"].coefficient(1) == -5)
    rep.gate("alpha", by["alphaR"].scale == 608164983684720)
    for t in tables:
        rep.add("table", t.name, t.basis_name, len(t.labels), t.scale, len(t.flags))
    enum_dir = _opt(cfg, "enumerators")
    if not enum_dir:
        rep.add("conditional", "skipped", "no enumerators ingested")
        return
    enums = {}
    for path in sorted(Path(enum_dir).glob("*.txt")):
        poly, headers = _read_poly(str(path))
        label = headers.get("label", path.stem.lstrip("C"))
        g = poly.ctx[0].genus
        enums[label] = WeightEnumerator(g, poly, path.stem)
    names = (_opt(cfg, "table") or "Rt1,Rt2,Rt3,Rt4,Rt5").split(",")
    samples = int(_opt(cfg, "samples", "5"))
    rng = _rng(cfg)
    for name in names:
        t = by[name]
        ok = True
        genus = next(iter(enums.values())).genus
        for i in range(samples):
            z = random_period_matrix(genus, rng)
            v = combine_relation(t, enums, z, cfg.target_err)
            ok &= abs(v.value) <= v.err
            rep.add("relation", name, i, v)
        rep.gate(f"{name}_vanishes", ok)


def cmd_divide(cfg: JobConfig, rep: Report) -> None:
    from .coble import divisibility_check

    if len(cfg.inputs) != 2:
        raise InputError("divide needs --numerator and --divisor")
    num, _ = _read_poly(cfg.inputs[0])
    den, _ = _read_poly(cfg.inputs[1])
    r = divisibility_check(num, den)
    if r.exact:
        rep.add("quotient_terms", len(r.quotient))
        for line in r.quotient.to_text().splitlines():
            rep.add("quotient", line)
    else:
        rep.add("remainder_terms", len(r.remainder))
    rep.gate("exact", r.exact)


COMMANDS: dict[str, Callable[[JobConfig, Report], None]] = {
    "theta-eval": cmd_theta_eval,
    "identity-check": cmd_identity_check,
    "wenum": cmd_wenum,
    "lattice-theta": cmd_lattice_theta,
    "invariant-basis": cmd_invariant_basis,
    "schottky": cmd_schottky,
    "fj-pipeline": cmd_fj_pipeline,
    "coble-s1": cmd_coble_s1,
    "membership": cmd_membership,
    "relation-check": cmd_relation_check,
    "divide": cmd_divide,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--target-err", type=float, default=DEFAULT_TARGET_ERR)
    common.add_argument("--work-budget", type=int, default=DEFAULT_WORK_BUDGET)
    common.add_argument("--cache-dir", default=None, help="defaults to $THETAKUMMER_CACHE")
    common.add_argument("--format", choices=("text", "lines"), default="lines")
    common.add_argument("--genus", type=int, default=None)
    common.add_argument("--samples", type=int, default=None)

    parser = argparse.ArgumentParser(prog="thetakummer", description="Theta relations and Kummer quartics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("theta-eval", parents=[common])
    p.add_argument("--tau", help="rows separated by ';', entries by ','")
    p.add_argument("--z", help="entries separated by ','")
    p.add_argument("--random-z", action="store_true")

    p = sub.add_parser("identity-check", parents=[common])
    p.add_argument("--id", default="riem", help="riem, tt, add, t8, joined with '+'")

    for name in ("wenum", "lattice-theta"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--code", required=True, help="code file or bundled name")

    p = sub.add_parser("invariant-basis", parents=[common])
    p.add_argument("--degree", type=int, default=12)

    sub.add_parser("schottky", parents=[common])

    p = sub.add_parser("fj-pipeline", parents=[common])
    p.add_argument("--input", help="polynomial file in genus g+1 constants; defaults to the Schottky relation")
    p.add_argument("--numeric", type=int, default=2, help="points checked against numerical extraction")

    p = sub.add_parser("coble-s1", parents=[common])
    p.add_argument("--symbolic", action="store_true")

    p = sub.add_parser("membership", parents=[common])
    p.add_argument("--target", required=True)
    p.add_argument("--gen", action="append", required=True)

    p = sub.add_parser("relation-check", parents=[common])
    p.add_argument("--enumerators", help="directory of ingested enumerator files")
    p.add_argument("--table", help="comma separated table names")

    p = sub.add_parser("divide", parents=[common])
    p.add_argument("--numerator", required=True)
    p.add_argument("--divisor", required=True)
    return parser


def config_from_args(ns: argparse.Namespace) -> JobConfig:
    inputs: list[str] = []
    options: dict[str, str] = {}
    sc = ns.subcommand
    if sc in ("wenum", "lattice-theta"):
        inputs.append(ns.code)
    elif sc == "fj-pipeline" and ns.input:
        inputs.append(ns.input)
    elif sc == "membership":
        inputs += [ns.target, *ns.gen]
    elif sc == "divide":
        inputs += [ns.numerator, ns.divisor]
    for key in ("tau", "z", "id", "degree", "numeric", "enumerators", "table"):
        v = getattr(ns, key, None)
        if v is not None:
            options[key] = str(v)
    for key in ("random_z", "symbolic"):
        if getattr(ns, key, False):
            options[key] = "1"
    if ns.samples is not None:
        options["samples"] = str(ns.samples)
    if options.get("enumerators"):
        inputs += sorted(str(p) for p in Path(options["enumerators"]).glob("*.txt"))
    return JobConfig(
        subcommand=sc,
        inputs=tuple(inputs),
        genus=ns.genus,
        target_err=ns.target_err,
        work_budget=ns.work_budget,
        seed=ns.seed,
        cache_dir=ns.cache_dir or os.environ.get("THETAKUMMER_CACHE"),
        output_format=ns.format,
        options=tuple(sorted(options.items())),
    )


def execute(cfg: JobConfig) -> tuple[str, int]:
    """Run a job, consulting the cache; returns (output, exit status)."""
    from .coble import CheckpointStore

    store = CheckpointStore(cfg.cache_dir) if cfg.cache_dir else None
    key = cfg.cache_key() if store else ""
    if store is not None:
        cached = store.get(key)
        if cached is not None:
            status, _, out = cached.partition("\n")
            return out, int(status)
    rep = Report()
    COMMANDS[cfg.subcommand](cfg, rep)
    out = rep.render(cfg.output_format)
    status = 1 if rep.failed else 0
    if store is not None:
        store.put(key, f"{status}\n{out}")
    return out, status


def run(argv: Sequence[str] | None = None) -> int:
    from .codes import WorkBudgetExceeded
    from .fourier_jacobi import NotInQuarticSpan
    from .polyring import ContextMismatch, NotHomogeneous

    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        out, status = execute(cfg)
    except (InputError, ContextMismatch, NotHomogeneous) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (WorkBudgetExceeded, PrecisionError, NotInQuarticSpan, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(out)
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
