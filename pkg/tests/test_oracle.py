import types
import warnings

import numpy as np
import pytest

from belljump import oracle
from belljump.checks import check_a2
from belljump.models import bundled_models
from belljump.oracle import (
    MASTER_ODE,
    OracleError,
    PicardWarning,
    expected_jump_count,
    solve_integral_equation_picard,
    solve_master_equation,
)

from conftest import zero_model


def test_master_zero_hamiltonian_constant():
    ctx = zero_model(3, start=1).context()
    sol = solve_master_equation(ctx, 0.0, 1.0, 0.25)
    assert sol.method == MASTER_ODE
    np.testing.assert_array_equal(sol.matrix(), np.tile([0.0, 1.0, 0.0], (5, 1)))


def test_master_two_level_closed_form(tl_ctx):
    sol = solve_master_equation(tl_ctx, 0.0, 3.0, 0.1)
    assert sol.times.size == 31
    t = sol.times
    ref = np.stack([np.cos(t / 2) ** 2, np.sin(t / 2) ** 2], axis=1)
    assert np.abs(sol.matrix() - ref).max() <= 1e-7
    assert np.abs(sol.matrix().sum(axis=1) - 1.0).max() <= 1e-8


@pytest.mark.parametrize("name", list(bundled_models()))
def test_master_matches_quantum_distribution(name):
    m = bundled_models()[name]
    ctx = m.context()
    sol = solve_master_equation(ctx, 0.0, m.t_end, m.t_end / 200)
    assert np.abs(sol.matrix() - ctx.weights(sol.times)).max() <= 1e-6
    assert np.abs(sol.matrix().sum(axis=1) - 1.0).max() <= 1e-8


def test_master_error_names_time_and_label(tl_ctx, monkeypatch):
    def failing(fun, span, y0, **kw):
        return types.SimpleNamespace(status=-1, t=np.array([0.0, 1.25]), y=np.stack([y0, y0], axis=1),
                                     message="Required step size is less than spacing between numbers.")

    monkeypatch.setattr(oracle, "solve_ivp", failing)
    with pytest.raises(OracleError, match=r"t=1\.25 \(label '[01]'\)"):
        solve_master_equation(tl_ctx, 0.0, 2.0, 0.5)


def test_picard_zero_hamiltonian():
    ctx = zero_model(3, start=2).context()
    it = solve_integral_equation_picard(ctx, 0.0, 1.0, 0.1)
    assert it.converged and it.n == 1
    np.testing.assert_array_equal(it.partial_sums[0], np.tile([0.0, 0.0, 1.0], (11, 1)))
    assert np.all(it.partial_sums[1] == it.partial_sums[0])


def test_picard_two_level_converges(tl_ctx):
    it = solve_integral_equation_picard(tl_ctx, 0.0, np.pi / 2, 1e-3, n_max=12)
    t = it.times
    ref = np.stack([np.cos(t / 2) ** 2, np.sin(t / 2) ** 2], axis=1)
    assert np.abs(it.partial_sums[min(8, it.n)] - ref).max() <= 1e-5
    sums = np.stack(it.partial_sums)
    assert np.all(np.diff(sums, axis=0) >= 0)


def test_picard_step_halving(tl_ctx):
    coarse = solve_integral_equation_picard(tl_ctx, 0.0, 1.6, 2e-3)
    fine = solve_integral_equation_picard(tl_ctx, 0.0, 1.6, 1e-3)
    diff = np.abs(fine.partial_sums[-1][::2] - coarse.partial_sums[-1]).max()
    # the trapezoid error is O(h^2), so the halving difference estimates it
    assert diff <= 1e-6


@pytest.mark.parametrize("name", list(bundled_models()))
def test_picard_below_quantum_distribution(name):
    m = bundled_models()[name]
    ctx = m.context()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PicardWarning)
        it = solve_integral_equation_picard(ctx, 0.0, m.t_end, m.t_end / 400, n_max=12)
    mu = ctx.weights(it.times)
    for S in it.partial_sums:
        assert (S - mu).max() <= 1e-6
    assert np.all(np.diff(np.stack(it.partial_sums), axis=0) >= 0)


def test_picard_warns_when_truncated():
    m = bundled_models()["random_hermitian"]
    with pytest.warns(PicardWarning):
        it = solve_integral_equation_picard(m.context(), 0.0, 2.0, 0.01, n_max=2)
    assert not it.converged and it.n == 2


def test_expected_jump_count(tl_ctx):
    law = solve_master_equation(tl_ctx, 0.0, np.pi, np.pi / 2000)
    assert expected_jump_count(tl_ctx, 0.0, np.pi, law) == pytest.approx(1.0, abs=1e-6)
    # partial window: int_0^t sin(s)/2 ds
    t = law.times[1000]
    assert expected_jump_count(tl_ctx, 0.0, t, law) == pytest.approx((1 - np.cos(t)) / 2, abs=1e-6)
    ctx = zero_model().context()
    assert expected_jump_count(ctx, 0.0, 1.0, solve_master_equation(ctx, 0.0, 1.0, 0.1)) == 0.0


@pytest.mark.parametrize("name", list(bundled_models()))
def test_expected_jumps_below_a2_integral(name):
    m = bundled_models()[name]
    ctx = m.context()
    law = solve_master_equation(ctx, 0.0, m.t_end, m.t_end / 1000)
    assert expected_jump_count(ctx, 0.0, m.t_end, law) <= check_a2(ctx, 0.0, m.t_end).a2_integral


def test_oracles_agree_on_jump_count():
    # frozen from the master-equation law; the Picard law must reproduce it
    m = bundled_models()["bell_lattice"]
    ctx = m.context()
    master = solve_master_equation(ctx, 0.0, 2.0, 0.002)
    picard = solve_integral_equation_picard(ctx, 0.0, 2.0, 0.002).as_solution()
    a = expected_jump_count(ctx, 0.0, 2.0, master)
    b = expected_jump_count(ctx, 0.0, 2.0, picard)
    assert a == pytest.approx(0.6935023877, abs=1e-8)
    assert b == pytest.approx(a, abs=1e-5)
