"""Trajectory ensembles and their comparison with the quantum distribution.

Trajectories are generated in fixed index chunks of ``BATCH_SIZE`` and the
per-chunk aggregates (integer counts and first-jump times) are merged in
index order, so the report does not depend on the number of workers.
"""

from __future__ import annotations

import json
import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .hilbert import ValidationError
from .oracle import expected_jump_count, solve_master_equation
from .rates import DistributionSnapshot, RateContext
from .sampler import (
    BATCH_SIZE,
    EXPLODED,
    HIT_CEMETERY,
    HazardTable,
    SimulationParams,
    Trajectory,
    simulate_batch,
)

ORACLE_CELLS = 2000


@dataclass
class EnsembleReport:
    n_trajectories: int
    checkpoints: List[float]
    empirical: List[DistributionSnapshot]
    expected: List[DistributionSnapshot]
    tv_distance: List[float]
    envelope_violations: List[int]
    mean_jumps: float
    jumps_se: float
    max_jumps_observed: int
    expected_jumps: float
    explosion_count: int
    cemetery_count: int
    min_weight_visited: float
    node_threshold: float
    clamped_at_node: int
    ks_statistics: Dict[str, float] = field(default_factory=dict)
    seed: int = 0
    t0: float = 0.0
    t_end: float = 0.0
    trajectories: Optional[List[Trajectory]] = None

    def to_dict(self) -> dict:
        labels = list(self.expected[0].weights) if self.expected else []
        return {
            "n_trajectories": self.n_trajectories,
            "seed": self.seed,
            "t0": self.t0,
            "t_end": self.t_end,
            "checkpoints": [
                {
                    "t": snap.t,
                    "tv_distance": tv,
                    "envelope_violations": ev,
                    "empirical": {lab: snap.weights.get(lab, 0.0) for lab in labels},
                    "expected": {lab: exp.weights[lab] for lab in labels},
                }
                for snap, exp, tv, ev in zip(self.empirical, self.expected, self.tv_distance,
                                             self.envelope_violations)
            ],
            "jumps": {
                "mean": self.mean_jumps,
                "standard_error": self.jumps_se,
                "max": self.max_jumps_observed,
                "expected": self.expected_jumps,
            },
            "explosion_count": self.explosion_count,
            "cemetery_count": self.cemetery_count,
            "min_weight_visited": self.min_weight_visited,
            "node_threshold": self.node_threshold,
            "clamped_at_node": self.clamped_at_node,
            "ks_statistics": dict(self.ks_statistics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def csv_rows(self) -> List[str]:
        """Lines of ``t,label,empirical,expected`` (no header)."""
        rows = []
        for snap, exp in zip(self.empirical, self.expected):
            for lab, w in exp.weights.items():
                rows.append(f"{snap.t!r},{lab},{snap.weights.get(lab, 0.0)!r},{w!r}")
        return rows


def tv_distance(p: DistributionSnapshot, q: DistributionSnapshot) -> float:
    """Total variation after normalizing both to unit mass (1 if either is empty)."""
    labels = list(dict.fromkeys([*p.weights, *q.weights]))
    a, b = p.as_array(labels), q.as_array(labels)
    sa, sb = a.sum(), b.sum()
    if sa <= 0 or sb <= 0:
        return 1.0
    return float(min(1.0, 0.5 * np.abs(a / sa - b / sb).sum()))


def jump_count_statistics(trajectories: Iterable[Trajectory], t: float):
    """``(mean, standard_error, max)`` of the number of jumps in ``(t0, t]``."""
    counts = np.array([sum(1 for s, _ in tr.events[1:] if s <= t) for tr in trajectories])
    if counts.size == 0:
        return 0.0, 0.0, 0
    se = float(counts.std(ddof=1) / math.sqrt(counts.size)) if counts.size > 1 else 0.0
    return float(counts.mean()), se, int(counts.max())


def default_checkpoints(t0: float, t_end: float, count: int = 5) -> List[float]:
    return [float(t0 + (t_end - t0) * k / count) for k in range(1, count + 1)]


def first_jump_survival(ctx: RateContext, table: HazardTable, t0: float, u) -> np.ndarray:
    """``P(T_1 > u)`` for ``Z_0`` drawn from ``mu_t0`` restricted to the admissible set."""
    mu = ctx.weights(float(t0)).copy()
    mu[mu <= ctx.threshold] = 0.0
    w = mu / mu.sum()
    u = np.atleast_1d(np.asarray(u, dtype=float))
    ks = np.flatnonzero(w)
    g = table.hazard(np.full((u.size, ks.size), t0), ks[None, :], u[:, None])
    return np.exp(-g) @ w[ks]


def ks_against(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """One-sample KS distance; infinite samples count as mass beyond every finite point."""
    n = samples.size
    x = np.sort(samples[np.isfinite(samples)])
    if n == 0:
        return 0.0
    if x.size == 0:
        return 0.0
    F = cdf(x)
    i = np.arange(1, x.size + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


# workers: the hazard table and context are shipped once per process

_WORKER: dict = {}


def _init_worker(ctx, params, table, checkpoints, keep_paths):
    _WORKER.update(ctx=ctx, params=params, table=table, checkpoints=checkpoints, keep_paths=keep_paths)


def _run_chunk(bounds):
    w = _WORKER
    return _summarize(
        simulate_batch(w["ctx"], w["params"], np.arange(*bounds), w["table"], w["checkpoints"], w["keep_paths"]),
        len(w["ctx"].labels),
        len(w["checkpoints"]),
    )


def _summarize(res, L: int, C: int) -> dict:
    counts = np.zeros((C, L), dtype=np.int64)
    for c in range(C):
        col = res.positions[:, c]
        counts[c] = np.bincount(col[col >= 0], minlength=L)
    status = res.status
    return {
        "n": int(res.indices.size),
        "counts": counts,
        "jumps_sum": int(res.n_jumps.sum()),
        "jumps_sumsq": int((res.n_jumps.astype(object) ** 2).sum()) if res.indices.size else 0,
        "jumps_max": int(res.n_jumps.max()) if res.indices.size else 0,
        "exploded": int((status == EXPLODED).sum()),
        "cemetery": int((status == HIT_CEMETERY).sum()),
        "min_weight": float(res.min_weight),
        "clamped": int(res.clamped_at_node),
        "first_jump": res.first_jump,
        "trajectories": res.trajectories,
    }


def _chunks(n: int):
    return [(s, min(s + BATCH_SIZE, n)) for s in range(0, n, BATCH_SIZE)]


def run_ensemble(ctx: RateContext, params: SimulationParams, n: int, checkpoints: Sequence[float] | None = None,
                 threads: int = 1, keep_paths: bool = False,
                 sink: Callable[[List[Trajectory]], None] | None = None,
                 table: HazardTable | None = None) -> EnsembleReport:
    """Simulate trajectories ``0..n-1`` and compare them with ``mu_t``.

    ``sink`` receives each chunk's trajectories in index order (for
    streaming to disk); with ``keep_paths`` they are also kept on the
    report. The expected jump count comes from the master-equation law.
    """
    if int(n) < 1:
        raise ValidationError("n must be a positive integer", "n")
    if int(threads) < 1:
        raise ValidationError("threads must be a positive integer", "threads")
    cps = sorted(float(c) for c in (default_checkpoints(params.t0, params.t_end)
                                    if checkpoints is None else checkpoints))
    if any(c < params.t0 or c > params.t_end for c in cps):
        raise ValidationError("checkpoints must lie in [t0, t_end]", "checkpoints")
    if table is None:
        table = HazardTable(ctx, params.t0, params.t_end, params.quad_rel_tol,
                            params.quad_abs_tol, params.root_tol)
    L, C = len(ctx.labels), len(cps)
    need_paths = keep_paths or sink is not None
    chunks = _chunks(int(n))

    if threads == 1 or len(chunks) == 1:
        _init_worker(ctx, params, table, cps, need_paths)
        results = map(_run_chunk, chunks)
        pool = None
    else:
        pool = ProcessPoolExecutor(
            max_workers=min(int(threads), len(chunks)),
            mp_context=multiprocessing.get_context("spawn"),
            initializer=_init_worker,
            initargs=(ctx, params, table, cps, need_paths),
        )
        results = pool.map(_run_chunk, chunks)

    counts = np.zeros((C, L), dtype=np.int64)
    jumps_sum = jumps_sumsq = jumps_max = exploded = cemetery = clamped = 0
    min_weight = math.inf
    first_jump = []
    kept: List[Trajectory] = []
    try:
        for part in results:
            counts += part["counts"]
            jumps_sum += part["jumps_sum"]
            jumps_sumsq += part["jumps_sumsq"]
            jumps_max = max(jumps_max, part["jumps_max"])
            exploded += part["exploded"]
            cemetery += part["cemetery"]
            clamped += part["clamped"]
            min_weight = min(min_weight, part["min_weight"])
            first_jump.append(part["first_jump"])
            if part["trajectories"] is not None:
                if sink is not None:
                    sink(part["trajectories"])
                if keep_paths:
                    kept.extend(part["trajectories"])
    finally:
        if pool is not None:
            pool.shutdown()

    N = int(n)
    mean = jumps_sum / N
    var = (jumps_sumsq - N * mean * mean) / (N - 1) if N > 1 else 0.0
    se = math.sqrt(max(var, 0.0) / N)

    labels = list(ctx.labels)
    expected, empirical, tvs, envelope = [], [], [], []
    for c, t in enumerate(cps):
        mu = ctx.weights(t)
        emp = counts[c] / N
        expected.append(DistributionSnapshot(t, dict(zip(labels, mu.tolist()))))
        empirical.append(DistributionSnapshot(t, dict(zip(labels, emp.tolist()))))
        tvs.append(tv_distance(empirical[-1], expected[-1]))
        bound = mu / ctx.mass + 4.0 * np.sqrt(mu / ctx.mass / N) + 4.0 / N
        envelope.append(int((emp > bound).sum()))

    step = (params.t_end - params.t0) / ORACLE_CELLS
    law = solve_master_equation(ctx, params.t0, params.t_end, step)
    expected_jumps = expected_jump_count(ctx, params.t0, params.t_end, law)

    fj = np.concatenate(first_jump)
    ks = {"first_jump_time": ks_against(fj, lambda u: 1.0 - first_jump_survival(ctx, table, params.t0, u))}

    return EnsembleReport(
        n_trajectories=N,
        checkpoints=cps,
        empirical=empirical,
        expected=expected,
        tv_distance=tvs,
        envelope_violations=envelope,
        mean_jumps=mean,
        jumps_se=se,
        max_jumps_observed=jumps_max,
        expected_jumps=expected_jumps,
        explosion_count=exploded,
        cemetery_count=cemetery,
        min_weight_visited=min_weight,
        node_threshold=ctx.threshold,
        clamped_at_node=clamped,
        ks_statistics=ks,
        seed=int(params.seed),
        t0=float(params.t0),
        t_end=float(params.t_end),
        trajectories=kept if keep_paths else None,
    )


def default_threads() -> int:
    env = os.environ.get("BELLJUMP_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValidationError(f"BELLJUMP_THREADS must be an integer, got {env!r}", "BELLJUMP_THREADS")
        if value < 1:
            raise ValidationError("BELLJUMP_THREADS must be positive", "BELLJUMP_THREADS")
        return value
    return os.cpu_count() or 1
