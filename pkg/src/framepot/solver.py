"""Stochastic greedy descent for the p-frame potential.

One proposal perturbs a single coordinate of a single row by ``delta * z``,
renormalizes the row and keeps it only if the potential strictly decreases.
Every ``accept_window`` proposals the step is scaled up when more than
``accept_high`` of them were accepted and down when fewer than ``accept_low``
were.  A run stops once the step falls below ``min_step`` or the proposal
budget is spent.

Random streams: run ``r`` of :func:`multi_start` uses the seed
``derive_seed(params.seed, r)``, i.e. the first 64-bit word of
``numpy.random.SeedSequence(seed, spawn_key=(r,))``; each run draws from a
``PCG64`` generator built on that seed.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernel
from .geometry import Configuration, FieldTag, gram, normalize, potential, potential_delta

DEFAULT_PROPOSAL_BUDGET = 2_000_000
CHUNK_ROWS = 1 << 15


class Termination(enum.Enum):
    STEP_FLOOR = "StepFloor"
    BUDGET = "Budget"


@dataclass(frozen=True)
class SolverParams:
    initial_step: float = 0.5
    min_step: float = 1e-9
    max_sweeps: Optional[int] = None  # sweeps of m*n proposals; None -> 2e6 proposals
    accept_window: int = 200
    accept_high: float = 0.5
    accept_low: float = 0.05
    step_up: float = 1.5
    step_down: float = 0.5
    seed: int = 0
    refresh_every: int = 10_000  # accepts between full recomputations
    record_trace: bool = True

    def __post_init__(self):
        if not (0 < self.accept_low < self.accept_high < 1):
            raise ValueError("need 0 < accept_low < accept_high < 1")
        if not (0 < self.min_step < self.initial_step):
            raise ValueError("need 0 < min_step < initial_step")
        if self.step_up <= 1 or not (0 < self.step_down < 1):
            raise ValueError("need step_up > 1 and 0 < step_down < 1")
        if self.accept_window < 1 or self.refresh_every < 1:
            raise ValueError("accept_window and refresh_every must be positive")
        if self.max_sweeps is not None and self.max_sweeps < 1:
            raise ValueError("max_sweeps must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def budget(self, m: int, n: int) -> int:
        if self.max_sweeps is None:
            return DEFAULT_PROPOSAL_BUDGET
        return int(self.max_sweeps) * m * n

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data) -> "SolverParams":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown solver parameters: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SolverParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class SolveReport:
    p: float
    best_potential: float
    best_config: Configuration
    proposals: int
    accepts: int
    final_step: float
    termination: Termination
    trace: Optional[np.ndarray] = None  # rows of (proposal, best potential, step)
    tracked_potential: float = float("nan")  # incremental value before the final recompute

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["proposal", "potential", "delta_step"])
        if self.trace is not None:
            for prop, pot, step in self.trace:
                writer.writerow([int(prop), repr(float(pot)), repr(float(step))])
        return buf.getvalue()

    def numeric_payload(self) -> dict:
        return {
            "p": self.p,
            "best_potential": self.best_potential,
            "best_config": self.best_config.to_dict(),
            "proposals": self.proposals,
            "accepts": self.accepts,
            "final_step": self.final_step,
            "termination": self.termination.value,
        }


@dataclass(frozen=True, eq=False)
class StabilityReport:
    runs: int
    potentials: list
    spread: float
    best: SolveReport
    coherence_spectra: list = field(default_factory=list)
    reports: list = field(default_factory=list)


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit seed for the stream identified by ``key`` under ``seed``."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_configuration(m: int, n: int, field, rng: np.random.Generator) -> Configuration:
    """Uniform [0, 1] real (and imaginary) parts, then each row normalized."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    field = FieldTag.parse(field)
    V = rng.uniform(0.0, 1.0, size=(m, n))
    if field is FieldTag.COMPLEX:
        V = V + 1j * rng.uniform(0.0, 1.0, size=(m, n))
    V = V / np.sqrt(np.sum(np.abs(V) ** 2, axis=1, keepdims=True))
    return Configuration(field, V)


def _draw_width(field: FieldTag) -> int:
    return 4 if field is FieldTag.COMPLEX else 3


def propose(config: Configuration, p: float, delta: float, rng: np.random.Generator):
    """One greedy move.  Returns ``(accepted, config, change_in_potential)``.

    Consumes the same random draws, in the same order, as one proposal of
    :func:`minimize`.
    """
    if not delta > 0:
        raise ValueError("step must be positive")
    m, n = config.m, config.n
    u = rng.random(_draw_width(config.field))
    k = min(int(u[0] * m), m - 1)
    l = min(int(u[1] * n), n - 1)
    z = 2.0 * u[2] - 1.0
    if config.field is FieldTag.COMPLEX:
        z = complex(z, 2.0 * u[3] - 1.0)
    w = np.array(config.vectors[k], dtype=np.complex128)
    w[l] += delta * z
    try:
        w = normalize(w)
    except ValueError:
        return False, config, 0.0
    if config.field is FieldTag.REAL:
        w = w.real
    change = potential_delta(config, p, k, w)
    if change < 0:
        return True, config.replace_row(k, w), change
    return False, config, 0.0


def minimize(
    m: int,
    n: int,
    p: float,
    field,
    params: SolverParams = SolverParams(),
    initial: Configuration | None = None,
) -> SolveReport:
    field = FieldTag.parse(field)
    if not p > 0:
        raise ValueError("exponent p must be positive")
    rng = make_rng(params.seed)
    if initial is None:
        initial = random_configuration(m, n, field, rng)
    elif (initial.m, initial.n, initial.field) != (m, n, field):
        raise ValueError("initial configuration does not match (m, n, field)")

    V = np.array(initial.vectors, dtype=np.complex128)
    P = _kernel.pair_powers(V, float(p))
    cur = _kernel.upper_sum(P)
    fstate = np.array([cur, params.initial_step, cur])
    istate = np.zeros(5, dtype=np.int64)
    budget = params.budget(m, n)
    width = _draw_width(field)
    traces = []
    trace_buf = np.empty((CHUNK_ROWS // params.accept_window + 2, 3))
    status = _kernel.CHUNK_EXHAUSTED
    while status == _kernel.CHUNK_EXHAUSTED:
        draws = rng.random((CHUNK_ROWS, width))
        status, _, ntrace = _kernel.run_chunk(
            V, P, draws, field is FieldTag.COMPLEX, float(p), fstate, istate,
            budget, params.min_step, params.accept_window,
            params.accept_high, params.accept_low, params.step_up, params.step_down,
            params.refresh_every, trace_buf, params.record_trace,
        )
        if ntrace:
            traces.append(trace_buf[:ntrace].copy())

    if field is FieldTag.REAL:
        V = V.real
    # rows drift from unit norm only at roundoff level; renormalize before validating
    V = V / np.sqrt(np.sum(np.abs(V) ** 2, axis=1, keepdims=True))
    best = Configuration(field, V)
    trace = None
    if params.record_trace:
        trace = np.concatenate(traces) if traces else np.empty((0, 3))
    return SolveReport(
        p=float(p),
        best_potential=potential(best, p),
        best_config=best,
        proposals=int(istate[_kernel.I_PROPS]),
        accepts=int(istate[_kernel.I_ACCEPTS]),
        final_step=float(fstate[_kernel.F_DELTA]),
        termination=Termination.STEP_FLOOR if status == _kernel.STEP_FLOOR else Termination.BUDGET,
        trace=trace,
        tracked_potential=float(fstate[_kernel.F_CUR]),
    )


def multi_start(
    m: int,
    n: int,
    p: float,
    field,
    params: SolverParams = SolverParams(),
    runs: int = 5,
    workers: int = 1,
) -> StabilityReport:
    """Independent restarts; the best run is the lowest potential, lowest index on ties."""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    run_params = [dataclasses.replace(params, seed=derive_seed(params.seed, r)) for r in range(runs)]

    def one(rp):
        return minimize(m, n, p, field, rp)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(one, run_params))
    else:
        reports = [one(rp) for rp in run_params]

    potentials = [r.best_potential for r in reports]
    best_index = min(range(runs), key=lambda i: (potentials[i], i))
    spectra = [np.sort(gram(r.best_config, exponents=()).offdiag_moduli) for r in reports]
    return StabilityReport(
        runs=runs,
        potentials=potentials,
        spread=max(potentials) - min(potentials),
        best=reports[best_index],
        coherence_spectra=spectra,
        reports=reports,
    )
