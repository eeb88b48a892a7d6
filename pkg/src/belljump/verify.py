"""Cross-validation of one model: ensemble against ``mu_t`` and both oracles.

Each check returns a :class:`CheckResult`; the model passes when all do.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass
from typing import List, Sequence

import numpy as np

from .checks import check_hs_inequality, rate_balance_residual
from .ensemble import EnsembleReport, run_ensemble
from .models import ModelSpec
from .oracle import PicardWarning, solve_integral_equation_picard, solve_master_equation
from .sampler import SimulationParams

TV_MAX = 0.02
JUMP_SIGMAS = 3.0
JUMP_FLOOR = 1e-6
MASTER_MAX = 1e-6
PICARD_DOMINATION = 1e-6
PICARD_AGREEMENT = 2e-5
PICARD_TERMS = 12
BALANCE_MAX = 1e-9
ORACLE_CELLS = 1000


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.value:.3e} (limit {self.threshold:.1e})"


def check_ensemble(report: EnsembleReport, threshold: float) -> List[CheckResult]:
    worst_tv = max(report.tv_distance)
    jump_err = abs(report.mean_jumps - report.expected_jumps)
    jump_lim = JUMP_SIGMAS * report.jumps_se + JUMP_FLOOR
    return [
        CheckResult("tv_distance", worst_tv < TV_MAX, worst_tv, TV_MAX),
        CheckResult("explosions", report.explosion_count == 0, report.explosion_count, 0),
        CheckResult("cemetery", report.cemetery_count == 0, report.cemetery_count, 0),
        CheckResult("mean_jumps", jump_err <= jump_lim, jump_err, jump_lim),
        CheckResult("min_weight_visited", report.min_weight_visited > threshold,
                    report.min_weight_visited, threshold),
    ]


def check_oracles(model: ModelSpec, ctx, t0: float, t_end: float) -> List[CheckResult]:
    step = (t_end - t0) / ORACLE_CELLS
    master = solve_master_equation(ctx, t0, t_end, step)
    mu = ctx.weights(master.times)
    m_err = float(np.abs(master.matrix() - mu).max())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PicardWarning)
        picard = solve_integral_equation_picard(ctx, t0, t_end, step, n_max=PICARD_TERMS)
    sums = np.stack(picard.partial_sums)
    drop = float(max(0.0, -np.diff(sums, axis=0).min())) if len(sums) > 1 else 0.0
    excess = float(max(0.0, (sums - mu[None]).max()))
    p_err = float(np.abs(sums[-1] - master.matrix()).max())
    return [
        CheckResult("master_vs_mu", m_err <= MASTER_MAX, m_err, MASTER_MAX),
        CheckResult("picard_monotone", drop == 0.0, drop, 0.0),
        CheckResult("picard_dominated", excess <= PICARD_DOMINATION, excess, PICARD_DOMINATION),
        CheckResult("picard_vs_master", p_err <= PICARD_AGREEMENT, p_err, PICARD_AGREEMENT),
    ]


def check_identities(model: ModelSpec, ctx, t0: float, t_end: float, seed: int) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    ts = rng.uniform(t0, t_end, 50)
    bal = float(np.abs(rate_balance_residual(ctx, ts)).max())
    ok, ratio = check_hs_inequality(model.H, model.pov, 100, rng)
    return [
        CheckResult("rate_balance", bal <= BALANCE_MAX, bal, BALANCE_MAX),
        CheckResult("hs_inequality", ok, ratio, 1.0),
    ]


def verify_model(model: ModelSpec, params: SimulationParams, n: int, checkpoints: Sequence[float] | None = None,
                 threads: int = 1, node_epsilon: float = 1e-12, keep_paths: bool = False, sink=None):
    """Run every check; returns ``(results, ensemble_report)``."""
    ctx = model.context(node_epsilon)
    report = run_ensemble(ctx, params, n, checkpoints, threads=threads, keep_paths=keep_paths, sink=sink)
    results = check_ensemble(report, ctx.threshold)
    results += check_oracles(model, ctx, params.t0, params.t_end)
    results += check_identities(model, ctx, params.t0, params.t_end, params.seed)
    return results, report


def results_to_dict(results: List[CheckResult]) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "checks": [{k: (float(v) if isinstance(v, (np.floating, np.integer)) else v)
                    for k, v in asdict(r).items()} for r in results],
    }
