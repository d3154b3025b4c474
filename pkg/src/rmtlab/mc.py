"""Seeded Monte Carlo checks of the tail inequalities and their ingredients.

A plan names an ensemble, an eigenvalue, one of the inequalities in
:class:`~rmtlab.limits.Theorem` and a grid of deviations ``t``.  Each
replicate is drawn from its own counter-based stream, so the report is the
same for any thread count or scheduling order.

Empirical frequencies come with Wilson 95% intervals.  A row counts as
dominated when the *lower* Wilson limit does not exceed the bound: the
inequalities bound true probabilities, not realized frequencies.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .ensembles import EnsembleSpec, Model, sample, sample_goe
from .errors import ParameterError, PlanError
from .limits import BoundParams, Theorem, bound_rhs, lambda_theta, lambda_theta_c, mp_edges
from .linalg import eig_sym

Z95 = 1.959963984540054


def wilson_interval(k: int, n: int, z: float = Z95):
    """Wilson score interval ``(lo, hi)`` for ``k`` successes out of ``n``."""
    if n < 1:
        raise ParameterError("need at least one trial")
    phat = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (phat + z2 / (2 * n)) / denom
    half = z / denom * math.sqrt(phat * (1 - phat) / n + z2 / (4 * n * n))
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return lo, hi


# ---------------------------------------------------------------------------
# plans and events


@dataclass(frozen=True)
class ExperimentPlan:
    """One tail experiment.

    ``eigen_index`` is ``i`` as in the inequality: ``lambda_i`` for ``T1*`` and
    ``T2*``, ``lambda_{p-i+1}`` for ``T3*``.
    """

    spec: EnsembleSpec
    theorem: Theorem
    t_grid: tuple
    replicates: int
    eigen_index: int = 1
    delta: Optional[float] = None
    C1: float = 2.0
    C2: Optional[float] = None
    C3: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "theorem", Theorem(self.theorem))
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))

    def bound_params(self, t: float = 0.0) -> BoundParams:
        spec = self.spec
        return BoundParams(
            theorem=self.theorem,
            n=spec.n,
            t=t,
            i=self.eigen_index,
            spikes=spec.spikes,
            sigma=spec.sigma,
            p=spec.p,
            delta=self.delta,
            C1=self.C1,
            C2=self.C2,
            C3=self.C3,
        )

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "spec": self.spec.to_dict(),
            "theorem": self.theorem.value,
            "t_grid": list(self.t_grid),
            "replicates": self.replicates,
            "eigen_index": self.eigen_index,
            "delta": self.delta,
            "C1": self.C1,
            "C2": self.C2,
            "C3": self.C3,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        return cls(
            spec=EnsembleSpec.from_dict(d["spec"]),
            theorem=Theorem(d["theorem"]),
            t_grid=tuple(d["t_grid"]),
            replicates=int(d["replicates"]),
            eigen_index=int(d.get("eigen_index", 1)),
            delta=d.get("delta"),
            C1=float(d.get("C1", 2.0)),
            C2=d.get("C2"),
            C3=d.get("C3"),
            name=d.get("name", ""),
        )

    def validate(self):
        if self.replicates < 1:
            raise PlanError("replicates must be >= 1")
        if list(self.t_grid) != sorted(self.t_grid):
            raise PlanError("t_grid must be ascending")
        goe = self.theorem in (Theorem.T1I, Theorem.T1II)
        if goe != (self.spec.model is Model.DEFORMED_GOE):
            raise PlanError(f"theorem {self.theorem.value} does not apply to model {self.spec.model.value}")
        try:
            for t in self.t_grid:
                bound_rhs(self.bound_params(t))
        except ParameterError as exc:
            raise PlanError(str(exc)) from exc


@dataclass(frozen=True)
class _Event:
    """``statistic`` of the sorted eigenvalues compared with ``center +/- shift +/- t``."""

    position: int  # 0-based index into the descending spectrum
    sqrt: bool
    center: float  # on the lambda scale
    shift: float  # extra offset away from the center
    upper: bool  # True: stat >= center + shift + t ; False: stat <= center - shift - t
    b_kind: Optional[str] = None  # noise-block check for *ii plans
    b_level: float = math.nan

    def threshold(self, t):
        base = math.sqrt(max(self.center, 0.0)) if self.sqrt else self.center
        return base + self.shift + t if self.upper else base - self.shift - t

    def statistic(self, eigs: np.ndarray) -> float:
        x = float(eigs[self.position])
        return math.sqrt(max(x, 0.0)) if self.sqrt else x


def plan_event(plan: ExperimentPlan) -> _Event:
    spec, th, i = plan.spec, plan.theorem, plan.eigen_index
    n = spec.n
    if th in (Theorem.T1I, Theorem.T1II):
        sigma, r = spec.sigma, len(spec.spikes)
        if th is Theorem.T1I:
            center = 2 * sigma if r == 0 else lambda_theta(spec.spikes[i - 1], sigma).value
            return _Event(i - 1, False, center, 0.0, True)
        lam = lambda_theta(spec.spikes[i - 1], sigma).value
        return _Event(i - 1, False, lam, plan.C1 * sigma * r / n, False, "goe-top", 0.5 * (2 * sigma + lam))

    p, r, s = spec.p, spec.r, spec.s
    c = (p - r) / n
    cp = (p - r - s) / n
    theta1 = math.sqrt(spec.spikes[0]) if spec.spikes else 1.0
    if th is Theorem.T2I:
        if r == 0:
            return _Event(0, True, (1 + math.sqrt(p / n)) ** 2, 0.0, True)
        return _Event(i - 1, True, lambda_theta_c(spec.spikes[i - 1], c).value, 0.0, True)
    if th is Theorem.T2II:
        lam = lambda_theta_c(spec.spikes[i - 1], c).value
        m_c = (p - r - s) / n
        return _Event(i - 1, True, lam, plan.C1 * theta1 * r / n, False, "spiked-top", 0.5 * (mp_edges(m_c)[1] + lam))
    if th is Theorem.T3I:
        if r == 0 and s == 0:
            return _Event(p - 1, True, (1 - math.sqrt(p / n)) ** 2, 0.0, False)
        if s == 0:
            return _Event(p - 1, True, (1 - math.sqrt(cp)) ** 2, theta1 / (2 * n), False)
        k = r + s - i + 1
        lam = lambda_theta_c(spec.spikes[k - 1], cp).value
        return _Event(p - i, True, lam, max(theta1, 1.0) / (2 * n), False)
    # T3ii: the approximate eigenvector bounds lambda_{p-i+1} from above
    k = r + s - i + 1
    lam = lambda_theta_c(spec.spikes[k - 1], cp).value
    return _Event(p - i, True, lam, plan.C1 * theta1 * (r + s) / n, True, "spiked-bottom", 0.5 * (mp_edges(cp)[0] + lam))


def _b_holds(draw, ev: _Event) -> bool:
    spec = draw.spec
    if ev.b_kind == "goe-top":
        r, n = len(spec.spikes), spec.n
        m = n - r
        Gt = math.sqrt(n / m) * draw.matrix.entries[r:, r:]
        return float(eig_sym(Gt).eigenvalues[0]) <= ev.b_level
    Gt = draw.data[len(spec.spikes) :]
    w = eig_sym(Gt @ Gt.T).eigenvalues
    if ev.b_kind == "spiked-top":
        return float(w[0]) <= ev.b_level
    return float(w[-1]) >= ev.b_level


# ---------------------------------------------------------------------------
# tail experiments


@dataclass
class TailRow:
    t: float
    empirical_prob: float
    lo95: float
    hi95: float
    wilson_halfwidth_95: float
    bound_rhs: float
    dominated: bool
    vacuous: bool
    hits: int


@dataclass
class TailReport:
    rows: List[TailRow]
    center: float
    replicates_used: int
    excluded_B_failures: int
    plan: dict = field(default_factory=dict)

    def checked_rows(self, below: float = 0.9) -> List[TailRow]:
        """Rows whose bound is informative (``bound_rhs < below``)."""
        return [row for row in self.rows if row.bound_rhs < below]

    @property
    def all_dominated(self) -> bool:
        return all(row.dominated for row in self.checked_rows())

    def to_dict(self) -> dict:
        return {
            "plan": self.plan,
            "center": self.center,
            "replicates_used": self.replicates_used,
            "excluded_B_failures": self.excluded_B_failures,
            "rows": [asdict(r) for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "emp", "lo95", "hi95", "bound", "dominated"])
        for row in self.rows:
            w.writerow([_fmt(row.t), _fmt(row.empirical_prob), _fmt(row.lo95), _fmt(row.hi95), _fmt(row.bound_rhs), int(row.dominated)])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return format(x, ".12g")


def _map_replicates(fn: Callable[[int], object], count: int, threads: int = 1) -> list:
    if threads <= 1:
        return [fn(k) for k in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def run_tail(plan: ExperimentPlan, threads: int = 1) -> TailReport:
    """Empirical tail frequencies of the plan's event next to the bound, one row per ``t``."""
    plan.validate()
    ev = plan_event(plan)
    spec = plan.spec

    def one(k: int):
        draw = sample(spec, k)
        stat = ev.statistic(eig_sym(draw.matrix).eigenvalues)
        ok = True if ev.b_kind is None else _b_holds(draw, ev)
        return stat, ok

    results = _map_replicates(one, plan.replicates, threads)
    stats = np.array([s for s, ok in results if ok])
    excluded = sum(1 for _, ok in results if not ok)
    used = stats.shape[0]
    rows = []
    for t in plan.t_grid:
        thr = ev.threshold(t)
        hits = int(np.sum(stats >= thr)) if ev.upper else int(np.sum(stats <= thr))
        bound = bound_rhs(plan.bound_params(t))
        if used:
            lo, hi = wilson_interval(hits, used)
            emp = hits / used
        else:
            lo, hi, emp = 0.0, 1.0, math.nan
        rows.append(TailRow(t, emp, lo, hi, 0.5 * (hi - lo), bound, lo <= bound, bound >= 1.0, hits))
    return TailReport(rows, ev.center, used, excluded, plan.to_dict())


# ---------------------------------------------------------------------------
# convergence sweeps


def limit_center(spec: EnsembleSpec, i: int = 1, smallest: bool = False) -> float:
    """Deterministic location of ``lambda_i`` (or ``lambda_{p-i+1}``) for ``spec``."""
    if spec.model is Model.DEFORMED_GOE:
        if smallest:
            raise ParameterError("smallest eigenvalues are not modelled for the deformed GOE")
        if i <= len(spec.spikes):
            return lambda_theta(spec.spikes[i - 1], spec.sigma).value
        return 2 * spec.sigma
    p, n, r, s = spec.p, spec.n, spec.r, spec.s
    if smallest:
        cp = (p - r - s) / n
        if i <= s:
            return lambda_theta_c(spec.spikes[r + s - i], cp).value
        return mp_edges(cp)[0]
    c = (p - r) / n
    if i <= r:
        return lambda_theta_c(spec.spikes[i - 1], c).value
    return mp_edges(c)[1]


@dataclass
class SweepRow:
    n: int
    center: float
    median_eig: float
    median_dev: float
    q25_dev: float
    q75_dev: float
    replicates: int


@dataclass
class SweepResult:
    rows: List[SweepRow]
    slope: float

    def to_dict(self) -> dict:
        return {"slope": self.slope, "rows": [asdict(r) for r in self.rows]}


def sample_extreme(spec: EnsembleSpec, replicates: int, i: int = 1, smallest: bool = False, threads: int = 1) -> np.ndarray:
    """``lambda_i`` (or ``lambda_{p-i+1}``) over ``replicates`` draws."""
    dim = spec.dim

    def one(k: int) -> float:
        w = eig_sym(sample(spec, k).matrix).eigenvalues
        return float(w[dim - i] if smallest else w[i - 1])

    return np.array(_map_replicates(one, replicates, threads))


def convergence_sweep(
    make_spec: Callable[[int], EnsembleSpec],
    n_list: Sequence[int],
    replicates: int,
    i: int = 1,
    smallest: bool = False,
    threads: int = 1,
) -> SweepResult:
    """Median ``|lambda - center|`` per ``n`` and the fitted log-log slope against ``n``."""
    n_list = list(n_list)
    if n_list != sorted(n_list):
        raise ParameterError("n_list must be ascending")
    rows = []
    for n in n_list:
        spec = make_spec(n)
        center = limit_center(spec, i, smallest)
        eigs = sample_extreme(spec, replicates, i, smallest, threads)
        dev = np.abs(eigs - center)
        q25, med, q75 = np.quantile(dev, [0.25, 0.5, 0.75])
        rows.append(SweepRow(n, center, float(np.median(eigs)), float(med), float(q25), float(q75), replicates))
    if len(rows) >= 2:
        slope = float(np.polyfit(np.log([r.n for r in rows]), np.log([r.median_dev for r in rows]), 1)[0])
    else:
        slope = math.nan
    return SweepResult(rows, slope)


# ---------------------------------------------------------------------------
# proof-ingredient audits


@dataclass
class ChiSquareRow:
    t: float
    upper_prob: float
    upper_lo95: float
    lower_prob: float
    lower_lo95: float
    bound: float
    dominated: bool


def chi_square_tail_check(a, t_grid, replicates: int, stream: np.random.Generator, chunk: int = 10_000) -> List[ChiSquareRow]:
    """Weighted chi-square deviations ``sum a_k (X_k^2 - 1)`` against ``exp(-t^2/4)``.

    Upper event: ``>= |a| t + |a|_inf t^2 / 2``; lower event: ``<= -|a| t``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0 or np.any(a <= 0):
        raise ParameterError("weights must be a non-empty vector of positive numbers")
    t_grid = np.asarray(t_grid, dtype=float)
    norm2, norm_inf = float(np.linalg.norm(a)), float(np.max(a))
    up_hits = np.zeros(t_grid.size, dtype=np.int64)
    lo_hits = np.zeros(t_grid.size, dtype=np.int64)
    done = 0
    while done < replicates:
        k = min(chunk, replicates - done)
        X = stream.standard_normal((k, a.size))
        Q = (X * X - 1.0) @ a
        up_hits += np.sum(Q[:, None] >= norm2 * t_grid + 0.5 * norm_inf * t_grid**2, axis=0)
        lo_hits += np.sum(Q[:, None] <= -norm2 * t_grid, axis=0)
        done += k
    rows = []
    for j, t in enumerate(t_grid):
        bound = math.exp(-t * t / 4)
        ulo, _ = wilson_interval(int(up_hits[j]), replicates)
        llo, _ = wilson_interval(int(lo_hits[j]), replicates)
        rows.append(ChiSquareRow(float(t), up_hits[j] / replicates, ulo, lo_hits[j] / replicates, llo, bound, ulo <= bound and llo <= bound))
    return rows


def interlaces(A, i0: int, tol: float = 1e-8) -> bool:
    """Whether deleting row/column ``i0`` of ``A`` gives interlacing eigenvalues."""
    a = np.asarray(A, dtype=float)
    lam = eig_sym(a).eigenvalues
    keep = np.delete(np.arange(a.shape[0]), i0)
    mu = eig_sym(a[np.ix_(keep, keep)]).eigenvalues
    return bool(np.all(lam[:-1] >= mu - tol) and np.all(mu >= lam[1:] - tol))


def interlacing_audit(replicates: int, n: int, stream: np.random.Generator, sigma: float = 1.0, tol: float = 1e-8) -> int:
    """Number of GOE draws whose principal submatrix fails to interlace (expected 0)."""
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    failures = 0
    for _ in range(replicates):
        A = sample_goe(n, sigma, stream)
        i0 = int(stream.integers(n))
        failures += not interlaces(A.entries, i0, tol)
    return failures
