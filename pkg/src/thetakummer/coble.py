"""Genus three layer: the ``s1`` product, relation tables, membership and division.

``s1 = prod_{e != 0} (prod_{<d,e>=0} t_d - prod_{<d,e>=1} t_d)`` with
``t_d = theta[0,d](tau)``.  Its expansion splits into a part even in every
``t_d`` and ``prod t_d`` times another such part.  Even parts are rewritten
through ``t_d**2 = sum_s (-1)**<d,s> Theta[s]**2`` and the product
``prod t_d`` through a degree 8 polynomial in the ``Theta[s]``, fitted over
orbit sums of admissible monomials, certified exactly modulo the Schottky
relation and gated numerically.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .charspace import Characteristic, dot
from .codes import WeightEnumerator, WorkBudgetExceeded, hadamard_stages, theta_via_enumerator
from .invariants import admissible_orbits, orbit_sum, schottky_poly
from .numtheta import (
    CertifiedComplex,
    EvalPoint,
    PeriodMatrix,
    csum,
    first_order_table,
    random_period_matrix,
    second_order_table,
)
from .polyring import (
    ContextMismatch,
    SparsePoly,
    const_vars,
    divide_exact,
    evaluate_certified,
    first_order_vars,
    span_membership,
    substitute_linear,
)

GENUS = 3
# Term count quoted for the reduced ``s1``; see ``s1_theta2_poly``.
PINNED_S1_TERMS = 5360
# Coefficients of s1 on (s_{1,1}, s_{2,1}) modulo the Schottky ideal.
PINNED_S1_MEMBERSHIP = (Fraction(-3787811, 13821931447380), Fraction(-914993, 4344035597748))
CACHE_ENV = "THETAKUMMER_CACHE"


class ValidationFailure(AssertionError):
    pass


class ReductionFailure(ValueError):
    pass


# --- s1 ----------------------------------------------------------------------


def _t_chars() -> list[Characteristic]:
    return [Characteristic(GENUS, 0, d) for d in range(1 << GENUS)]


def s1_numeric(tau: PeriodMatrix, target_err: float = 1e-10) -> CertifiedComplex:
    """The seven factor product evaluated from first order theta constants."""
    if tau.genus != GENUS:
        raise ValueError("s1 is defined in genus 3")
    table = first_order_table(EvalPoint(tau, np.zeros(GENUS)), target_err / 1e3)
    t = [table[Characteristic(GENUS, 0, d).index] for d in range(1 << GENUS)]
    out = CertifiedComplex.exact(1)
    for e in range(1, 1 << GENUS):
        a = CertifiedComplex.exact(1)
        b = CertifiedComplex.exact(1)
        for d in range(1 << GENUS):
            if dot(d, e):
                b = b * t[d]
            else:
                a = a * t[d]
        out = out * (a - b)
    return out


def s1_first_order_poly() -> SparsePoly:
    """``s1`` as a degree 28 polynomial in the ``theta[0,d]``."""
    ctx = first_order_vars(_t_chars())
    t = [SparsePoly.var(ctx, d) for d in range(1 << GENUS)]
    out = SparsePoly.constant(ctx, 1)
    for e in range(1, 1 << GENUS):
        a = SparsePoly.constant(ctx, 1)
        b = SparsePoly.constant(ctx, 1)
        for d in range(1 << GENUS):
            if dot(d, e):
                b = b * t[d]
            else:
                a = a * t[d]
        out = out * (a - b)
    return out


def _fit_rational(x: complex, max_den: int = 4096, tol: float = 1e-7) -> Fraction:
    if abs(x.imag) > tol:
        raise ValidationFailure(f"fitted coefficient {x} is not real")
    f = Fraction(x.real).limit_denominator(max_den)
    if abs(float(f) - x.real) > tol:
        raise ValidationFailure(f"fitted coefficient {x.real} is not a small rational")
    return f


def fit_product_rewrite(samples: int = 40, seed: int = 0) -> SparsePoly:
    """``prod_d theta[0,d](tau)`` fitted over orbit sums of the admissible
    degree 8 monomials.

    Least squares at random points followed by rationalization; the result
    still has to pass :func:`certify_product_rewrite`.
    """
    ctx = const_vars(GENUS)
    sums = [orbit_sum(e, ctx) for e in admissible_orbits(GENUS, 8)]
    rng = np.random.default_rng(seed)
    rows, rhs = [], []
    for _ in range(max(samples, 4 * len(sums))):
        p = EvalPoint(random_period_matrix(GENUS, rng), np.zeros(GENUS))
        f = first_order_table(p, 1e-13)
        s = second_order_table(p, 1e-13)
        vals = [c.value for c in (s[i] for i in range(1 << GENUS))]
        y = np.prod([f[m.index].value for m in _t_chars()])
        w = 1.0 / max(abs(y), 1e-300)
        rows.append([complex(q.evaluate(vals)) * w for q in sums])
        rhs.append(y * w)
    x, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    out = SparsePoly.zero(ctx)
    for q, c in zip(sums, x):
        out = out + q * _fit_rational(complex(c))
    return out


def _squares_of_t() -> list[SparsePoly]:
    """``t_d**2 = sum_s (-1)**<d,s> Theta[s]**2`` in the constants."""
    ctx = const_vars(GENUS)
    n = 1 << GENUS
    return [
        SparsePoly(ctx, {tuple(2 if a == s else 0 for a in range(n)): (-1) ** dot(d, s) for s in range(n)})
        for d in range(n)
    ]


def certify_product_rewrite(p8: SparsePoly) -> Fraction:
    """Exact check that ``p8**2 - prod t_d**2`` is a rational multiple of the
    Schottky polynomial; returns the multiple."""
    prod = SparsePoly.constant(p8.ctx, 1)
    for sq in _squares_of_t():
        prod = prod * sq
    diff = p8 * p8 - prod
    s = schottky_poly("second")
    res = span_membership(diff, [s])
    if not res.in_span:
        raise ValidationFailure("product rewrite squared differs from the squares beyond the Schottky relation")
    return res.coefficients[0]


def validate_product_rewrite(p8: SparsePoly, samples: int = 50, seed: int = 1) -> float:
    """Numeric gate; returns the worst ``|residual| / err``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        p = EvalPoint(random_period_matrix(GENUS, rng), np.zeros(GENUS))
        f = first_order_table(p, 1e-13)
        s = second_order_table(p, 1e-13)
        lhs = CertifiedComplex.exact(1)
        for m in _t_chars():
            lhs = lhs * f[m.index]
        r = evaluate_certified(p8, list(s.values), list(s.errs)) - lhs
        if abs(r.value) > r.err:
            raise ValidationFailure(f"product rewrite fails: |{r.value:.3g}| > {r.err:.3g}")
        worst = max(worst, abs(r.value) / r.err)
    return worst


@lru_cache(maxsize=None)
def product_theta_poly() -> SparsePoly:
    """``prod_d theta[0,d](tau)`` in the ``Theta[s](tau)``, fitted, certified and gated."""
    p8 = fit_product_rewrite()
    certify_product_rewrite(p8)
    validate_product_rewrite(p8)
    return p8


def _hadamard(p: SparsePoly) -> SparsePoly:
    for stage in hadamard_stages(GENUS):
        p = substitute_linear(p, stage)
    return p


def _double_exponents(p: SparsePoly) -> SparsePoly:
    return SparsePoly(p.ctx, {tuple(2 * k for k in e): c for e, c in p.terms.items()})


def reduce_s1(s1: SparsePoly, p8: SparsePoly) -> SparsePoly:
    """Rewrite a first order polynomial whose monomials are all even or all odd.

    Raises :class:`ReductionFailure` on any mixed parity monomial.
    """
    uctx = const_vars(GENUS)
    even, odd = {}, {}
    for e, c in s1.terms.items():
        if all(k % 2 == 0 for k in e):
            even[tuple(k // 2 for k in e)] = c
        elif all(k % 2 for k in e):
            odd[tuple(k // 2 for k in e)] = c
        else:
            raise ReductionFailure(f"monomial {e} is neither a square nor prod t times a square")
    a = _double_exponents(_hadamard(SparsePoly(uctx, even)))
    b = _double_exponents(_hadamard(SparsePoly(uctx, odd)))
    return a + p8 * b


def _cache_dir() -> Path | None:
    root = os.environ.get(CACHE_ENV)
    return Path(root) if root else None


@lru_cache(maxsize=None)
def s1_theta2_poly() -> SparsePoly:
    """``s1`` as a degree 28 polynomial in the eight ``Theta[s](tau)``.

    With a cache root set in ``THETAKUMMER_CACHE`` the result is stored there
    and reused on later runs.
    """
    store = CheckpointStore(_cache_dir()) if _cache_dir() else None
    key = CheckpointStore.key("s1_theta2_poly", "v1")
    if store is not None:
        text = store.get(key)
        if text is not None:
            return SparsePoly.from_text(text)[0]
    p = reduce_s1(s1_first_order_poly(), product_theta_poly())
    if store is not None:
        store.put(key, p.to_text({"name": "s1"}))
    return p


def canonical_text(p: SparsePoly) -> str:
    return p.to_text()


def is_canonical_fixed_point(p: SparsePoly) -> bool:
    text = canonical_text(p)
    return canonical_text(SparsePoly.from_text(text)[0]) == text


# --- membership --------------------------------------------------------------


@dataclass(frozen=True)
class MembershipReport:
    names: tuple[str, ...]
    coefficients: tuple[Fraction, ...] | None
    residual: SparsePoly
    basis: tuple[str, ...]

    @property
    def in_span(self) -> bool:
        return self.coefficients is not None

    def coefficient(self, name: str) -> Fraction:
        if self.coefficients is None:
            raise ValueError("target is not in the span")
        return self.coefficients[self.names.index(name)]

    def lines(self) -> list[str]:
        if self.coefficients is None:
            return [f"in_span 0", f"residual_terms {len(self.residual)}"]
        out = ["in_span 1"]
        out += [f"coef {n} {c.numerator}/{c.denominator}" for n, c in zip(self.names, self.coefficients)]
        out.append("basis " + " ".join(self.basis))
        return out


def membership_report(target: SparsePoly, gens: Sequence[tuple[str, SparsePoly]]) -> MembershipReport:
    """Exact coefficients of ``target`` over named generators, verified by
    resubstitution, or the nonzero residual."""
    names = tuple(n for n, _ in gens)
    if len(set(names)) != len(names):
        raise ValueError("generator names must be distinct")
    polys = [p for _, p in gens]
    res = span_membership(target, polys)
    basis = tuple(names[i] for i in res.basis)
    if not res.in_span:
        return MembershipReport(names, None, res.residual, basis)
    check = target
    for c, p in zip(res.coefficients, polys):
        check = check - p * c
    if not check.is_zero():
        raise ValidationFailure("membership coefficients do not reproduce the target")
    return MembershipReport(names, tuple(res.coefficients), check, basis)


# --- division ----------------------------------------------------------------


@dataclass(frozen=True)
class DivisionResult:
    quotient: SparsePoly | None
    remainder: SparsePoly

    @property
    def exact(self) -> bool:
        return self.quotient is not None


def divisibility_check(numerator: SparsePoly, divisor: SparsePoly) -> DivisionResult:
    if divisor.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    numerator.require_homogeneous() if numerator.terms else None
    divisor.require_homogeneous()
    q, r = divide_exact(numerator, divisor)
    if r.is_zero():
        return DivisionResult(q, r)
    return DivisionResult(None, r)


def theta8_sum_poly() -> SparsePoly:
    """``sum over even m of theta_m**8`` in the genus three ``Theta[s]``.

    Each ``theta[e,d]**2`` is the Riemann square of the constants.
    """
    from .invariants import riem_square_table

    table = riem_square_table(GENUS)
    out = SparsePoly.zero(const_vars(GENUS))
    for m, sq in table.items():
        if m.is_even:
            out = out + sq**4
    return out


# --- relation tables ---------------------------------------------------------


class RelationFormatError(ValueError):
    def __init__(self, line: int, column: int, message: str) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class MissingBasis(KeyError):
    def __init__(self, labels: Sequence[str]) -> None:
        super().__init__("missing basis entries: " + ", ".join(labels))
        self.labels = tuple(labels)


@dataclass(frozen=True)
class RelationTable:
    """``scale * name = sum_i coefficients[i] * basis_name[labels[i]]``."""

    name: str
    basis_name: str
    labels: tuple[str, ...]
    coefficients: tuple[Fraction, ...]
    scale: int = 1
    flags: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.coefficients):
            raise ValueError("one coefficient per basis label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate basis label")
        if self.scale == 0:
            raise ValueError("scale must be nonzero")

    def coefficient(self, label: str | int) -> Fraction:
        label = str(label)
        if label not in self.labels:
            return Fraction(0)
        return self.coefficients[self.labels.index(label)]

    def normalized(self) -> dict[str, Fraction]:
        return {k: c / self.scale for k, c in zip(self.labels, self.coefficients)}

    def to_text(self) -> str:
        lines = [f"relation {self.name} over {self.basis_name}"]
        if self.scale != 1:
            lines.append(f"scale {self.scale}")
        lines += [f"flag {f}" for f in self.flags]
        lines += [f"{k} {c.numerator}/{c.denominator}" for k, c in zip(self.labels, self.coefficients)]
        return "\n".join(lines) + "\n"


def parse_relations(text: str) -> list[RelationTable]:
    tables: list[RelationTable] = []
    cur: dict | None = None

    def close() -> None:
        if cur is not None:
            tables.append(RelationTable(cur["name"], cur["basis"], tuple(cur["labels"]),
                                        tuple(cur["coefs"]), cur["scale"], tuple(cur["flags"])))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "relation":
            if len(fields) != 4 or fields[2] != "over":
                raise RelationFormatError(lineno, 1, "expected 'relation NAME over BASIS'")
            close()
            cur = {"name": fields[1], "basis": fields[3], "labels": [], "coefs": [], "scale": 1, "flags": []}
            continue
        if cur is None:
            raise RelationFormatError(lineno, 1, "entry before any relation header")
        if fields[0] == "scale":
            try:
                cur["scale"] = int(fields[1])
            except (IndexError, ValueError):
                raise RelationFormatError(lineno, 7, "scale must be an integer") from None
            continue
        if fields[0] == "flag":
            cur["flags"].append(line[len("flag"):].strip())
            continue
        if len(fields) != 2:
            raise RelationFormatError(lineno, 1, "expected 'index numerator/denominator'")
        try:
            num, den = fields[1].split("/")
            c = Fraction(int(num), int(den))
        except (ValueError, ZeroDivisionError):
            raise RelationFormatError(lineno, len(fields[0]) + 2, f"bad coefficient {fields[1]!r}") from None
        if fields[0] in cur["labels"]:
            raise RelationFormatError(lineno, 1, f"duplicate index {fields[0]}")
        cur["labels"].append(fields[0])
        cur["coefs"].append(c)
    close()
    return tables


def format_relations(tables: Sequence[RelationTable]) -> str:
    return "\n".join(t.to_text() for t in tables)


def relation_tables() -> list[RelationTable]:
    """Bundled genus four tables: ``Rt1..Rt5`` over the code basis ``C``,
    ``R1..R5`` and ``BigNorm`` over ``Rt``, and ``alphaR`` over ``C``."""
    text = resources.files("thetakummer.data").joinpath("relations.txt").read_text()
    return parse_relations(text)


def relation_table(name: str) -> RelationTable:
    for t in relation_tables():
        if t.name == name:
            return t
    raise KeyError(name)


def flatten(table: RelationTable, tables: Sequence[RelationTable]) -> RelationTable:
    """Rewrite a table over named relations as a table over their common basis."""
    by_name = {t.name: t for t in tables}
    prefix = table.basis_name
    inner = [by_name[f"{prefix}{k}"] for k in table.labels]
    bases = {t.basis_name for t in inner}
    if len(bases) != 1:
        raise ValueError("inner relations use different bases")
    acc: dict[str, Fraction] = {}
    for c, t in zip(table.coefficients, inner):
        for k, v in t.normalized().items():
            acc[k] = acc.get(k, Fraction(0)) + c * v
    labels = tuple(sorted((k for k, v in acc.items() if v), key=_label_key))
    return RelationTable(table.name, bases.pop(), labels, tuple(acc[k] for k in labels), table.scale)


def _label_key(label: str) -> tuple[int, int | str]:
    return (0, int(label)) if label.isdigit() else (1, label)


def combine_relation(table: RelationTable, enumerators: Mapping[str, WeightEnumerator], z: PeriodMatrix,
                     target_err: float = 1e-10) -> CertifiedComplex:
    """``(1/scale) sum_C a_C theta_{Lambda(C)}(Z)`` through the enumerators."""
    missing = [k for k, c in zip(table.labels, table.coefficients) if c and k not in enumerators]
    if missing:
        raise MissingBasis(missing)
    parts = []
    n = max(1, len(table.labels))
    for k, c in table.normalized().items():
        if c:
            th = theta_via_enumerator(enumerators[k], z, target_err / (n * max(1.0, abs(float(c)))))
            parts.append(th * float(c) + CertifiedComplex(0j, abs(th.value) * abs(float(c)) * 2.0**-52))
    return csum(parts) if parts else CertifiedComplex.exact(0)


def relation_polynomial(table: RelationTable, enumerators: Mapping[str, WeightEnumerator],
                        work_budget: int = 2**32) -> SparsePoly:
    """``(1/scale) sum_C a_C W_C`` as a polynomial in the second order constants."""
    missing = [k for k in table.labels if k not in enumerators]
    if missing:
        raise MissingBasis(missing)
    ctx = None
    out = None
    work = 0
    for k, c in table.normalized().items():
        w = enumerators[k].poly
        if ctx is None:
            ctx, out = w.ctx, SparsePoly.zero(w.ctx)
        elif w.ctx != ctx:
            raise ContextMismatch("enumerators of different genus")
        work += len(w)
        if work > work_budget:
            raise WorkBudgetExceeded(f"{work} terms exceed the work budget {work_budget}")
        out = out + w * c
    if out is None:
        raise ValueError("empty relation has no context")
    return out


# --- checkpoints -------------------------------------------------------------


class CheckpointStore:
    """Text blobs under ``root/<first two hex>/<sha256>.txt``, written by atomic rename."""

    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)

    @staticmethod
    def key(*parts: str) -> str:
        h = hashlib.sha256()
        for p in parts:
            h.update(p.encode())
            h.update(b"\0")
        return h.hexdigest()

    def path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.txt"

    def get(self, key: str) -> str | None:
        p = self.path(key)
        return p.read_text() if p.exists() else None

    def put(self, key: str, text: str) -> Path:
        p = self.path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=p.parent, suffix=".part")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, p)
        return p
