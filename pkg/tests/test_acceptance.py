"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are printed
outside pytest's capture) or ``python tests/test_acceptance.py``.
"""

import json
import math
import sys
import time
import warnings

import numpy as np
import pytest
from scipy import stats

from belljump.checks import check_hs_inequality, check_povm_contraction, rate_balance_residual
from belljump.cli import main as cli_main
from belljump.ensemble import run_ensemble
from belljump.models import bundled_models, random_hermitian, two_level
from belljump.oracle import PicardWarning, solve_integral_equation_picard, solve_master_equation
from belljump.rates import jump_rate
from belljump.sampler import HazardTable, SimulationParams, cumulative_hazard, sample_holding_times, simulate_batch

N = 100_000


@pytest.fixture
def say(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def two_level_batch():
    ctx = two_level().context()
    res = simulate_batch(ctx, SimulationParams(t_end=np.pi, seed=2024), np.arange(N), keep_paths=False)
    return ctx, res


def test_criterion_01_two_level_closed_forms(say):
    start = time.perf_counter()
    m = two_level()
    ctx = m.context()
    ts = np.random.default_rng(1).uniform(0.01, np.pi - 0.01, 100)
    err = max(abs(jump_rate(ctx, t, "0", "1") - math.tan(t / 2)) for t in ts)
    gamma = cumulative_hazard(ctx, 0.0, "0", np.pi / 2)
    g_err = abs(gamma - math.log(2))
    elapsed = time.perf_counter() - start
    ok = err <= 1e-10 and g_err <= 1e-8 and elapsed < 1.0
    say(1, "two-level closed forms", ok,
        f"max |sigma - tan(t/2)| = {err:.2e}, |Gamma - ln 2| = {g_err:.2e}, {elapsed:.3f}s")


def test_criterion_02_equivariance(say):
    start = time.perf_counter()
    tl = two_level()
    rep_tl = run_ensemble(tl.context(), SimulationParams(t_end=np.pi, seed=1), N,
                          [0.5, 1.0, np.pi / 2, 2.5], threads=1)
    rh = random_hermitian(16, seed=1)
    rep_rh = run_ensemble(rh.context(), SimulationParams(t_end=2.0, seed=1), N, None, threads=1)
    elapsed = time.perf_counter() - start
    tv = rep_tl.tv_distance + rep_rh.tv_distance
    ok = max(tv) < 0.02 and elapsed < 120 and len(rep_rh.checkpoints) == 5
    say(2, "equivariance", ok,
        f"two_level TV {[round(v, 4) for v in rep_tl.tv_distance]}, "
        f"random_hermitian TV {[round(v, 4) for v in rep_rh.tv_distance]}, {elapsed:.1f}s on one core")


def test_criterion_03_holding_time_law(say, two_level_batch):
    _, res = two_level_batch
    ks = stats.kstest(res.first_jump, lambda u: np.sin(u / 2) ** 2).statistic
    say(3, "holding-time law", ks < 0.01, f"KS vs survival cos^2(u/2) = {ks:.4f} at n={N}")


def test_criterion_04_node_avoidance(say, two_level_batch):
    ctx, res = two_level_batch
    before = int((res.first_jump < np.pi).sum())
    ok = before == N and np.all(res.n_jumps == 1) and res.min_weight > ctx.threshold
    say(4, "node avoidance", ok,
        f"{before}/{N} jumped before pi, min mu_t(X_t) at events = {res.min_weight:.3e} "
        f"(threshold {ctx.threshold:.0e})")


def test_criterion_05_non_explosion(say):
    lines, ok = [], True
    for name, m in bundled_models().items():
        rep = run_ensemble(m.context(), SimulationParams(t_end=m.t_end, max_jumps=10_000, seed=5), N, threads=1)
        dev = abs(rep.mean_jumps - rep.expected_jumps)
        good = (rep.explosion_count == 0 and rep.cemetery_count == 0
                and dev <= 3 * rep.jumps_se + 1e-6)
        if name == "two_level":
            good &= abs(rep.expected_jumps - 1.0) <= 1e-6
        ok &= good
        lines.append(f"{name}: jumps {rep.mean_jumps:.4f}+/-{rep.jumps_se:.4f} vs {rep.expected_jumps:.4f}, "
                     f"exploded {rep.explosion_count}, cemetery {rep.cemetery_count}")
    say(5, "non-explosion", ok, "; ".join(lines))


def test_criterion_06_oracle_agreement(say):
    worst = 0.0
    for m in bundled_models().values():
        ctx = m.context()
        sol = solve_master_equation(ctx, 0.0, m.t_end, m.t_end / 500)
        worst = max(worst, float(np.abs(sol.matrix() - ctx.weights(sol.times)).max()))
    ctx = two_level().context()
    t1 = np.pi / 2
    master = solve_master_equation(ctx, 0.0, t1, 1e-3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PicardWarning)
        picard = solve_integral_equation_picard(ctx, 0.0, t1, 1e-3, n_max=12)
    sums = np.stack(picard.partial_sums)
    mu = ctx.weights(picard.times)
    monotone = bool(np.all(np.diff(sums, axis=0) >= 0))
    excess = float((sums - mu[None]).max())
    gap = float(np.abs(sums[-1] - master.matrix()).max())
    ok = worst <= 1e-6 and monotone and excess <= 1e-6 and gap <= 2e-5
    say(6, "oracle agreement", ok,
        f"master vs mu {worst:.2e}; Picard monotone={monotone}, excess over mu {excess:.2e}, "
        f"vs master {gap:.2e} after {picard.n} terms")


def test_criterion_07_rate_balance(say):
    rng = np.random.default_rng(7)
    worst = 0.0
    for m in bundled_models().values():
        ctx = m.context()
        ts = rng.uniform(0.0, m.t_end, 50)
        ks = rng.integers(0, len(ctx.labels), 50)
        res = rate_balance_residual(ctx, ts)[np.arange(50), ks]
        worst = max(worst, float(np.abs(res).max()))
    say(7, "rate balance", worst <= 1e-9, f"max residual {worst:.2e} over 50 (t, x) per model")


def test_criterion_08_hilbert_schmidt(say):
    rng = np.random.default_rng(8)
    ratios, contraction = [], True
    for m in bundled_models().values():
        ok, ratio = check_hs_inequality(m.H, m.pov, 100, rng)
        ratios.append(ratio if ok else float("inf"))
        for _ in range(100):
            C = rng.standard_normal((m.dim, m.dim)) + 1j * rng.standard_normal((m.dim, m.dim))
            contraction &= all(check_povm_contraction(C, m.pov, x) for x in m.pov.labels)
    ok = max(ratios) <= 1.0 and contraction
    say(8, "Hilbert-Schmidt inequality", ok,
        f"worst LHS/RHS {max(ratios):.4f}, contraction holds: {contraction}")


def test_criterion_09_memorylessness(say):
    ctx = two_level().context()
    params = SimulationParams(t_end=np.pi)
    table = HazardTable(ctx, 0.0, np.pi)
    u0 = 1.0
    direct = sample_holding_times(ctx, 0.0, "0", params, np.random.default_rng(90), 20_000, table)
    cond = direct[direct > u0][:10_000]
    restart = sample_holding_times(ctx, u0, "0", params, np.random.default_rng(91), 10_000, table)
    res = stats.ks_2samp(cond, restart)
    ks = res.statistic
    ok = ks < 0.02 and cond.size == 10_000
    say(9, "memorylessness", ok, f"two-sample KS {ks:.4f}, p-value {res.pvalue:.3f} "
        f"({cond.size} conditioned vs {restart.size} restarted)")


def test_criterion_10_determinism(say, tmp_path, capsys):
    runs = []
    for tag, threads in (("a", "1"), ("b", "1"), ("c", "3")):
        out = tmp_path / tag
        code = cli_main(["simulate", "--model", "random_hermitian", "--n", "10000", "--seed", "42",
                         "--threads", threads, "--output", str(out)])
        capsys.readouterr()
        assert code == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    same = runs[0] == runs[1] == runs[2]
    n_lines = runs[0]["trajectories.jsonl"].count(b"\n")
    json.loads(runs[0]["report.json"])
    say(10, "determinism", same and n_lines == 10_000,
        "trajectories.jsonl, report.json and checkpoints.csv byte-identical across repeat and 1 vs 3 threads")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
