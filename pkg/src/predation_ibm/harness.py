"""Convergence experiments: simulated scaled trajectories against the limit ODE.

Two comparisons are made per replica:

* the sup-norm distance between ``(Xi^K, Y^K)`` and ``(x, y)`` on the
  sampling grid;
* the distance between the empirical occupation measure and the limit
  density ``y(t) p_r(x(t), a) phi(x(t))`` on a common (t, age) grid.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import ibm, ode
from .errors import ConfigurationError, ContractError, SimulationAbort
from .hazards import Status, truncation_age
from .responses import ResponseModel

S = Status.SEARCH
M = Status.MANIPULATE

DEFAULT_LADDER = ((100.0, 10.0), (1000.0, 10 ** 1.5), (10000.0, 100.0))


def trajectory_error(trajectory, solution):
    """Sup over the common grid of ``|Xi - x|`` and ``|Y_total - y|``."""
    t_a = np.asarray(trajectory.t)
    t_b = np.asarray(solution.t)
    if t_a.shape != t_b.shape or not np.allclose(t_a, t_b, rtol=0, atol=1e-12):
        raise ContractError("trajectory and ODE solution are not on the same time grid")
    ex = float(np.max(np.abs(np.asarray(trajectory.xi) - solution.x))) if len(t_a) else 0.0
    ey = float(np.max(np.abs(np.asarray(trajectory.y_total) - solution.y))) if len(t_a) else 0.0
    return ex, ey


# ---------------------------------------------------------------------------
# limit occupation density
# ---------------------------------------------------------------------------


def _bin_survival_integrals(law, x, edges):
    """``int p(x, a) da`` over each age bin, the last column being ``[edges[-1], inf)``."""
    if law.is_zero:
        return np.zeros(len(edges))
    lo = np.asarray(edges, dtype=float)
    hi = np.append(lo[1:], math.inf)
    try:
        vals = np.asarray(law._surv_int(lo, hi, x), dtype=float)
        if vals.shape == lo.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(law._surv_int(a, b, x)) for a, b in zip(lo, hi)])


@dataclass
class LimitOccupation:
    """Limit of the occupation measure integrated over the harness grid.

    ``mass[status][i, j]`` is ``int_{t-bin i} y(t) phi(x(t)) int_{age-bin j}
    p_r(x(t), a) da dt``, computed with Gauss-Legendre nodes in each t-bin.
    ``normalization_error`` is the largest deviation from 1 of
    ``sum_r int p_r phi da`` over all nodes.
    """

    t_edges: np.ndarray
    age_edges: np.ndarray
    mass: dict
    normalization_error: float

    @classmethod
    def from_model(cls, system: ode.LimitSystem, x0, y0, t_edges, age_edges, nodes: int = 8, rtol=1e-10):
        model = system.model
        t_edges = np.asarray(t_edges, dtype=float)
        age_edges = np.asarray(age_edges, dtype=float)
        gx, gw = np.polynomial.legendre.leggauss(nodes)
        nt = len(t_edges) - 1
        mids = 0.5 * (t_edges[1:] + t_edges[:-1])
        half = 0.5 * np.diff(t_edges)
        tt = (mids[:, None] + half[:, None] * gx[None, :]).ravel()
        ww = (half[:, None] * gw[None, :]).ravel()
        sol = ode.integrate(system, x0, y0, float(t_edges[-1]), t_eval=np.concatenate([[0.0], tt]), rtol=rtol,
                            with_conservation=False)
        xs, ys = sol.x[1:], sol.y[1:]
        mass = {S: np.zeros((nt, len(age_edges))), M: np.zeros((nt, len(age_edges)))}
        lo, hi = model.x_range
        worst = 0.0
        for k, (x, y, w) in enumerate(zip(xs, ys, ww)):
            x = min(max(x, lo), hi)
            f = system.phi(x)
            total = 0.0
            for st in (S, M):
                b = _bin_survival_integrals(model.law(st), x, age_edges) * f
                total += b.sum()
                mass[st][k // nodes] += w * y * b
            worst = max(worst, abs(total - 1.0))
        return cls(t_edges, age_edges, mass, worst)


@dataclass
class DistanceReport:
    tv: dict
    l1: float
    empty: bool = False
    slices: dict = field(default_factory=dict)

    def to_dict(self):
        return {"tv_S": self.tv.get(S, math.nan), "tv_M": self.tv.get(M, math.nan), "l1": self.l1,
                "empty": self.empty}


def total_variation(p, q) -> float:
    """TV distance of two nonnegative vectors after normalising each to 1."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())


def occupation_distance(measure, limit) -> DistanceReport:
    """Per-status mean over t-slices of the slice-normalised TV distance,
    and the unnormalised L1 distance summed over statuses.

    Slices where the limit has no mass are skipped; a slice where only the
    limit has mass counts as TV 1.
    """
    if measure.mass[S].shape != limit.mass[S].shape or not np.allclose(measure.age_edges, limit.age_edges):
        raise ContractError("occupation measure and limit use different grids")
    total = sum(float(m.sum()) for m in measure.mass.values())
    l1 = float(sum(np.abs(measure.mass[st] - limit.mass[st]).sum() for st in (S, M)))
    if total <= 0:
        return DistanceReport({S: math.nan, M: math.nan}, l1, empty=True)
    tv = {}
    slices = {}
    for st in (S, M):
        emp, lim = measure.mass[st], limit.mass[st]
        vals = []
        for i in range(emp.shape[0]):
            if lim[i].sum() <= 0:
                continue
            if emp[i].sum() <= 0:
                vals.append(1.0)
            else:
                vals.append(total_variation(emp[i], lim[i]))
        slices[st] = vals
        tv[st] = float(np.mean(vals)) if vals else math.nan
    return DistanceReport(tv, l1, slices=slices)


# ---------------------------------------------------------------------------
# studies
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceStudy:
    model: ResponseModel
    x0: float
    y0: float
    ladder: tuple = DEFAULT_LADDER
    T: float = 5.0
    replicas: int = 20
    seed_root: int = 0
    n_samples: int = 100
    t_bins: int = 25
    n_age_bins: int = 40
    a_cap: float | None = None
    timing: bool = False
    threads: int = 1

    def validate(self):
        if not self.ladder:
            raise ConfigurationError("the ladder needs at least one rung")
        lams = [k1 / k2 for k1, k2 in self.ladder]
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ConfigurationError("K1/K2 must increase strictly along the ladder")
        if self.replicas < 1:
            raise ConfigurationError("replicas must be at least 1")
        if not self.model.simulable:
            raise ConfigurationError(f"model {self.model.name!r} cannot be simulated")


@dataclass
class StudyReport:
    rows: list
    rungs: list
    normalization_error: float
    age_edges: list
    limit_final: tuple

    def to_dict(self):
        return {
            "rungs": self.rungs,
            "rows": self.rows,
            "limit_normalization_error": self.normalization_error,
            "age_edges": self.age_edges,
            "limit_final": list(self.limit_final),
        }


def _study_age_edges(study, sol):
    if study.a_cap is not None:
        return np.linspace(0.0, study.a_cap, study.n_age_bins + 1)
    lo, hi = study.model.x_range
    xs = np.clip([float(np.min(sol.x)), float(np.max(sol.x))], lo, hi)
    cap = 0.0
    for law in (study.model.law_S, study.model.law_M):
        if law.is_zero:
            continue
        for x in xs:
            cap = max(cap, truncation_age(law, float(x), 1e-6))
    return np.linspace(0.0, cap, study.n_age_bins + 1)


def _quantiles(values):
    v = np.asarray([x for x in values if np.isfinite(x)], dtype=float)
    if len(v) == 0:
        return {"median": math.nan, "q10": math.nan, "q90": math.nan}
    return {"median": float(np.median(v)), "q10": float(np.quantile(v, 0.1)), "q90": float(np.quantile(v, 0.9))}


def _replica(args):
    model, cfg, sol, limit, rung, rep, timing = args
    t0 = time.perf_counter()
    try:
        res = ibm.simulate(model, cfg)
        err = None
    except SimulationAbort as exc:
        res, err = exc.partial, str(exc)
    seconds = time.perf_counter() - t0
    row = {"K1": cfg.K1, "K2": cfg.K2, "replica": rep}
    if err is None:
        ex, ey = trajectory_error(res.trajectory, sol)
        dist = occupation_distance(res.occupation, limit)
        row.update({"sup_err_x": ex, "sup_err_y": ey, "tv_S": dist.tv[S], "tv_M": dist.tv[M], "l1": dist.l1})
    else:
        row.update({"sup_err_x": math.nan, "sup_err_y": math.nan, "tv_S": math.nan, "tv_M": math.nan,
                    "l1": math.nan, "error": err})
    row["seconds"] = seconds if timing else None
    return rung, rep, row


def run_study(study: ConvergenceStudy, progress=None) -> StudyReport:
    """Integrate the ODE once, then simulate every rung and replica.

    Seeds are derived from ``(seed_root, rung, replica)`` so the report is
    deterministic; wall-clock times are only included when ``timing`` is set.
    """
    study.validate()
    system = ode.LimitSystem(study.model)
    grid = np.linspace(0.0, study.T, study.n_samples + 1)
    sol = ode.integrate(system, study.x0, study.y0, study.T, t_eval=grid, with_conservation=False)
    edges = _study_age_edges(study, sol)
    t_edges = np.linspace(0.0, study.T, study.t_bins + 1)
    limit = LimitOccupation.from_model(system, study.x0, study.y0, t_edges, edges)

    jobs = []
    for r, (K1, K2) in enumerate(study.ladder):
        for i in range(study.replicas):
            cfg = ibm.SimConfig(K1=float(K1), K2=float(K2), T=study.T, x0=study.x0, y0=study.y0,
                                seed=np.random.SeedSequence(int(study.seed_root), spawn_key=(r, i)),
                                n_samples=study.n_samples, t_bins=study.t_bins, age_edges=tuple(edges))
            jobs.append((study.model, cfg, sol, limit, r, i, study.timing))
    if study.threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=study.threads) as ex:
            results = list(ex.map(_replica, jobs))
    else:
        results = []
        for j in jobs:
            results.append(_replica(j))
            if progress is not None:
                progress(j[4], j[5])
    results.sort(key=lambda x: (x[0], x[1]))
    rows = [row for _, _, row in results]

    rungs = []
    for r, (K1, K2) in enumerate(study.ladder):
        rr = [row for rung, _, row in results if rung == r]
        summary = {"K1": float(K1), "K2": float(K2), "lambda_K": float(K1) / float(K2),
                   "aborted": sum(1 for row in rr if "error" in row)}
        for key in ("sup_err_x", "sup_err_y", "tv_S", "tv_M", "l1"):
            summary[key] = _quantiles([row[key] for row in rr])
        if study.timing:
            summary["seconds"] = float(sum(row["seconds"] for row in rr))
        rungs.append(summary)
    return StudyReport(rows, rungs, limit.normalization_error, [float(e) for e in edges],
                       (float(sol.x[-1]), float(sol.y[-1])))


def strictly_decreasing(values) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))
