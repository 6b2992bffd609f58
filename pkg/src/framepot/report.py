"""Parameter sweeps over (m, n, p) and the tables built from them."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import struct
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analytic import (
    Axis,
    ClosedFormValue,
    DifferenceTable,
    exact_for_cell,
    second_difference,
    simplex_coherence_sq,
)
from .geometry import Configuration, FieldTag, gram
from .solver import SolverParams, derive_seed, multi_start

TABLE_FORMAT = "framepot-table/1"
SIMPLEX_TOL = 1e-3
CSV_COLUMNS = [
    "m", "n", "p", "field", "best_potential", "spread", "simplex",
    "coherence_mean", "analytic_num", "analytic_den", "abs_gap",
]


class TableFormatError(ValueError):
    pass


def _fraction_str(x: Optional[Fraction]):
    return None if x is None else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class SimplexFlag:
    is_simplex: bool
    coherence_mean: float
    coherence_spread: float
    expected_coherence_sq: Optional[Fraction] = None

    def to_dict(self) -> dict:
        return {
            "is_simplex": self.is_simplex,
            "coherence_mean": self.coherence_mean,
            "coherence_spread": self.coherence_spread,
            "expected_coherence_sq": _fraction_str(self.expected_coherence_sq),
        }

    @classmethod
    def from_dict(cls, d) -> "SimplexFlag":
        exp = d.get("expected_coherence_sq")
        return cls(
            bool(d["is_simplex"]),
            float(d["coherence_mean"]),
            float(d["coherence_spread"]),
            None if exp is None else Fraction(exp),
        )


def detect_simplex(config: Configuration, tol: float = SIMPLEX_TOL) -> SimplexFlag:
    """Flag configurations whose pairwise moduli all agree within ``tol``."""
    if config.m < 2:
        raise ValueError("need at least two vectors")
    moduli = gram(config, exponents=()).offdiag_moduli
    spread = float(moduli.max() - moduli.min())
    expected = None
    if config.m > config.n:
        expected = simplex_coherence_sq(config.m, config.n).value
    return SimplexFlag(spread <= tol, float(moduli.mean()), spread, expected)


@dataclass(frozen=True)
class SweepSpec:
    m_range: tuple
    n_range: tuple
    p_list: tuple
    field: FieldTag = FieldTag.COMPLEX
    solver: SolverParams = SolverParams()
    runs_per_cell: int = 5
    output_path: Optional[str] = None
    simplex_tol: float = SIMPLEX_TOL

    def __post_init__(self):
        object.__setattr__(self, "field", FieldTag.parse(self.field))
        object.__setattr__(self, "m_range", tuple(int(x) for x in self.m_range))
        object.__setattr__(self, "n_range", tuple(int(x) for x in self.n_range))
        object.__setattr__(self, "p_list", tuple(_clean_p(p) for p in self.p_list))
        for name in ("m_range", "n_range"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} must be a non-empty range of positive integers")
        if not self.p_list or any(p <= 0 for p in self.p_list):
            raise ValueError("p_list must hold positive exponents")
        if self.runs_per_cell < 1:
            raise ValueError("runs_per_cell must be at least 1")

    def cells(self):
        for p in self.p_list:
            for n in range(self.n_range[0], self.n_range[1] + 1):
                for m in range(self.m_range[0], self.m_range[1] + 1):
                    yield m, n, p

    def to_dict(self) -> dict:
        return {
            "m_range": list(self.m_range),
            "n_range": list(self.n_range),
            "p_list": list(self.p_list),
            "field": self.field.value,
            "solver": self.solver.to_dict(),
            "runs_per_cell": self.runs_per_cell,
            "output_path": self.output_path,
            "simplex_tol": self.simplex_tol,
        }

    @classmethod
    def from_dict(cls, d) -> "SweepSpec":
        return cls(
            m_range=tuple(d["m_range"]),
            n_range=tuple(d["n_range"]),
            p_list=tuple(d["p_list"]),
            field=d["field"],
            solver=SolverParams.from_dict(d["solver"]),
            runs_per_cell=int(d["runs_per_cell"]),
            output_path=d.get("output_path"),
            simplex_tol=float(d.get("simplex_tol", SIMPLEX_TOL)),
        )


def _clean_p(p):
    p = float(p)
    return int(p) if p.is_integer() else p


def _p_key(p) -> int:
    return int.from_bytes(struct.pack("<d", float(p)), "little")


def cell_seed(seed: int, m: int, n: int, p, field: FieldTag) -> int:
    return derive_seed(seed, m, n, _p_key(p), 0 if field is FieldTag.REAL else 1)


@dataclass(frozen=True)
class Cell:
    m: int
    n: int
    p: float
    field: FieldTag
    best_potential: float
    spread: float
    simplex: SimplexFlag
    potentials: tuple = ()
    analytic: Optional[ClosedFormValue] = None
    abs_gap: Optional[float] = None
    best_config: Optional[Configuration] = None

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "p": self.p,
            "field": self.field.value,
            "best_potential": self.best_potential,
            "spread": self.spread,
            "potentials": list(self.potentials),
            "simplex": self.simplex.to_dict(),
            "analytic": None if self.analytic is None else self.analytic.to_dict(),
            "abs_gap": self.abs_gap,
            "best_config": None if self.best_config is None else self.best_config.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "Cell":
        return cls(
            m=int(d["m"]),
            n=int(d["n"]),
            p=_clean_p(d["p"]),
            field=FieldTag.parse(d["field"]),
            best_potential=float(d["best_potential"]),
            spread=float(d["spread"]),
            simplex=SimplexFlag.from_dict(d["simplex"]),
            potentials=tuple(float(x) for x in d.get("potentials", ())),
            analytic=None if d.get("analytic") is None else ClosedFormValue.from_dict(d["analytic"]),
            abs_gap=None if d.get("abs_gap") is None else float(d["abs_gap"]),
            best_config=None if d.get("best_config") is None else Configuration.from_dict(d["best_config"]),
        )


@dataclass
class TableArtifact:
    cells: dict  # (m, n, p) -> Cell
    spec: Optional[SweepSpec] = None
    metadata: dict = field(default_factory=dict)

    def numeric_payload(self) -> dict:
        """Everything except the metadata block (which carries a timestamp)."""
        return {
            "spec": None if self.spec is None else self.spec.to_dict(),
            "cells": [self.cells[k].to_dict() for k in sorted(self.cells)],
        }

    def to_dict(self) -> dict:
        out = {"format": TABLE_FORMAT, "metadata": dict(self.metadata)}
        out.update(self.numeric_payload())
        return out

    @classmethod
    def from_dict(cls, d) -> "TableArtifact":
        if d.get("format") != TABLE_FORMAT:
            raise TableFormatError(f"unsupported table format {d.get('format')!r}, expected {TABLE_FORMAT}")
        cells = {}
        for cd in d["cells"]:
            c = Cell.from_dict(cd)
            cells[(c.m, c.n, c.p)] = c
        spec = None if d.get("spec") is None else SweepSpec.from_dict(d["spec"])
        return cls(cells, spec, dict(d.get("metadata", {})))

    def series(self, p, n):
        """Best potentials ``{m: value}`` at fixed ``(p, n)``."""
        p = _clean_p(p)
        return {m: c.best_potential for (m, nn, pp), c in self.cells.items() if pp == p and nn == n}


def run_sweep(spec: SweepSpec, keep_configs: bool = True) -> TableArtifact:
    cells = {}
    for m, n, p in spec.cells():
        params = dataclasses.replace(spec.solver, seed=cell_seed(spec.solver.seed, m, n, p, spec.field))
        stab = multi_start(m, n, p, spec.field, params, runs=spec.runs_per_cell)
        best = stab.best
        flag = detect_simplex(best.best_config, spec.simplex_tol) if m >= 2 else SimplexFlag(True, 0.0, 0.0)
        analytic = exact_for_cell(m, n, p, spec.field)
        gap = None if analytic is None else abs(best.best_potential - float(analytic.value))
        cells[(m, n, p)] = Cell(
            m=m,
            n=n,
            p=p,
            field=spec.field,
            best_potential=best.best_potential,
            spread=stab.spread,
            simplex=flag,
            potentials=tuple(stab.potentials),
            analytic=analytic,
            abs_gap=gap,
            best_config=best.best_config if keep_configs else None,
        )
    meta = {
        "version": __version__,
        "numpy": np.__version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    table = TableArtifact(cells, spec, meta)
    if spec.output_path:
        export_table(table, spec.output_path)
    return table


# comparison


@dataclass(frozen=True)
class GapRow:
    m: int
    n: int
    p: float
    best: float
    analytic: Fraction
    source: str
    abs_gap: float
    rel_gap: float
    tolerance: float
    passed: bool


@dataclass
class ComparisonReport:
    rows: list
    skipped: list  # cells whose closed form is outside its proven range
    rtol: float
    atol: float

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.rows)

    def max_gap_by_p(self) -> dict:
        out = {}
        for r in self.rows:
            out[r.p] = max(out.get(r.p, 0.0), r.abs_gap)
        return out

    def render(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "n", "p", "best_potential", "analytic", "source", "abs_gap", "rel_gap", "tolerance", "status"])
        for r in self.rows:
            w.writerow([r.m, r.n, r.p, repr(r.best), _fraction_str(r.analytic), r.source,
                        f"{r.abs_gap:.3e}", f"{r.rel_gap:.3e}", f"{r.tolerance:.3e}",
                        "PASS" if r.passed else "FAIL"])
        for c in self.skipped:
            w.writerow([c.m, c.n, c.p, repr(c.best_potential), _fraction_str(c.analytic.value),
                        c.analytic.source.value, f"{c.abs_gap:.3e}", "", "", "OUT_OF_DOMAIN"])
        for p, g in sorted(self.max_gap_by_p().items()):
            w.writerow([f"# p={p} max_abs_gap={g:.3e}"])
        return buf.getvalue()


def compare_with_analytic(table: TableArtifact, rtol: float = 1e-4, atol: float = 1e-8) -> ComparisonReport:
    """Gap between measured minima and every closed form valid for the cell.

    A cell passes when ``|best - exact| <= rtol * |exact| + atol``.
    """
    rows, skipped = [], []
    for key in sorted(table.cells):
        c = table.cells[key]
        if c.analytic is None:
            continue
        if not c.analytic.domain_ok:
            skipped.append(c)
            continue
        exact = float(c.analytic.value)
        gap = abs(c.best_potential - exact)
        rel = gap / abs(exact) if exact else (0.0 if gap == 0 else math.inf)
        tol = rtol * abs(exact) + atol
        rows.append(GapRow(c.m, c.n, c.p, c.best_potential, c.analytic.value, c.analytic.source.value,
                           gap, rel, tol, gap <= tol))
    return ComparisonReport(rows, skipped, rtol, atol)


# second differences and quadratic fits


@dataclass
class DifferenceReport:
    p: float
    measured: DifferenceTable
    exact: DifferenceTable  # only where all three stencil cells have a proven closed form

    def render(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "n", "p", "axis", "D_measured", "D_exact", "gap"])
        for key in sorted(self.measured.cells):
            d = self.measured.cells[key]
            e = self.exact.cells.get(key)
            w.writerow([key[0], key[1], self.p, self.measured.axis.value, repr(float(d)),
                        "" if e is None else _fraction_str(e),
                        "" if e is None else f"{abs(float(d) - float(e)):.3e}"])
        return buf.getvalue()


def difference_table(table: TableArtifact, axis="m", p=2) -> DifferenceReport:
    p = _clean_p(p)
    axis = Axis.parse(axis)
    measured, exact = {}, {}
    for (m, n, pp), c in table.cells.items():
        if pp != p:
            continue
        measured[(m, n)] = c.best_potential
        if c.analytic is not None and c.analytic.domain_ok:
            exact[(m, n)] = c.analytic.value
    return DifferenceReport(p, second_difference(measured, axis), second_difference(exact, axis))


@dataclass(frozen=True)
class QuadraticFit:
    a2: float
    a1: float
    a0: float
    residual: float


def fit_quadratic(series) -> QuadraticFit:
    """Least-squares ``a2 m^2 + a1 m + a0``; residual is the max abs deviation."""
    ms = np.array(sorted(series), dtype=np.float64)
    if ms.size < 4:
        raise ValueError("need at least four points for a quadratic fit")
    ys = np.array([float(series[int(m)]) for m in ms])
    # centre and scale m so the Vandermonde matrix stays well conditioned
    c, s = ms.mean(), max(np.ptp(ms) / 2, 1.0)
    x = (ms - c) / s
    A = np.vander(x, 3)
    if np.linalg.cond(A) > 1e10:
        raise ValueError("ill-conditioned series")
    coef = np.linalg.lstsq(A, ys, rcond=None)[0]
    b2, b1, b0 = coef
    a2 = b2 / s**2
    a1 = b1 / s - 2 * b2 * c / s**2
    a0 = b0 - b1 * c / s + b2 * c**2 / s**2
    residual = float(np.max(np.abs(A @ coef - ys)))
    return QuadraticFit(float(a2), float(a1), float(a0), residual)


# persistence


def table_to_csv(table: TableArtifact) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for key in sorted(table.cells):
        c = table.cells[key]
        a = c.analytic.value if c.analytic is not None else None
        w.writerow([
            c.m, c.n, c.p, c.field.value, repr(c.best_potential), repr(c.spread),
            int(c.simplex.is_simplex), repr(c.simplex.coherence_mean),
            "" if a is None else a.numerator, "" if a is None else a.denominator,
            "" if c.abs_gap is None else repr(c.abs_gap),
        ])
    return buf.getvalue()


def table_from_csv(text: str) -> TableArtifact:
    """Rebuild a (lossy) table from CSV; spreads of moduli and configs are absent."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CSV_COLUMNS:
        raise TableFormatError(f"unexpected CSV columns {reader.fieldnames}")
    cells = {}
    for row in reader:
        try:
            m, n, p = int(row["m"]), int(row["n"]), _clean_p(row["p"])
            fieldtag = FieldTag.parse(row["field"])
            analytic = None
            if row["analytic_num"]:
                value = Fraction(int(row["analytic_num"]), int(row["analytic_den"]))
                analytic = exact_for_cell(m, n, p, fieldtag)
                if analytic is None or analytic.value != value:
                    raise TableFormatError(f"analytic value {value} does not match the closed form for {(m, n, p)}")
            cells[(m, n, p)] = Cell(
                m=m, n=n, p=p, field=fieldtag,
                best_potential=float(row["best_potential"]),
                spread=float(row["spread"]),
                simplex=SimplexFlag(bool(int(row["simplex"])), float(row["coherence_mean"]), math.nan),
                analytic=analytic,
                abs_gap=float(row["abs_gap"]) if row["abs_gap"] else None,
            )
        except (KeyError, ValueError) as exc:
            raise TableFormatError(f"malformed CSV row {row}: {exc}") from exc
    return TableArtifact(cells)


def export_table(table: TableArtifact, path, fmt: Optional[str] = None) -> Path:
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "json")
    if fmt == "json":
        path.write_text(json.dumps(table.to_dict(), indent=1))
    elif fmt == "csv":
        path.write_text(table_to_csv(table))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def import_table(path, fmt: Optional[str] = None) -> TableArtifact:
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "json")
    text = path.read_text()
    if fmt == "csv":
        return table_from_csv(text)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TableFormatError(f"{path}: not valid JSON ({exc})") from exc
    try:
        return TableArtifact.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise TableFormatError(f"{path}: malformed table ({exc})") from exc
