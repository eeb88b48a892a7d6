import numpy as np
import pytest

from belljump.ensemble import (
    default_checkpoints,
    jump_count_statistics,
    ks_against,
    run_ensemble,
    tv_distance,
)
from belljump.models import bundled_models, random_hermitian
from belljump.rates import DistributionSnapshot
from belljump.sampler import SimulationParams, Trajectory

from conftest import zero_model


def snap(**w):
    return DistributionSnapshot(0.0, w)


def test_tv_examples():
    assert tv_distance(snap(a=0.3, b=0.7), snap(a=0.3, b=0.7)) == 0.0
    assert tv_distance(snap(a=1.0), snap(b=1.0)) == 1.0
    assert tv_distance(snap(a=0.5, b=0.5), snap(a=1.0, b=0.0)) == pytest.approx(0.5)
    # normalization before comparing
    assert tv_distance(snap(a=2.0, b=2.0), snap(a=0.5, b=0.5)) == 0.0


def test_jump_count_statistics():
    frozen = [Trajectory(i, [(0.0, "0")], "REACHED_HORIZON", 1.0) for i in range(4)]
    assert jump_count_statistics(frozen, 1.0) == (0.0, 0.0, 0)
    trs = [Trajectory(0, [(0.0, "a"), (0.5, "b"), (0.9, "a")], "REACHED_HORIZON", 1.0),
           Trajectory(1, [(0.0, "a"), (0.7, "b")], "REACHED_HORIZON", 1.0)]
    mean, se, mx = jump_count_statistics(trs, 0.8)
    assert (mean, mx) == (1.0, 1)
    assert se == 0.0
    assert jump_count_statistics(trs, 1.0)[0] == 1.5


def test_ks_against_uniform():
    x = (np.arange(1000) + 0.5) / 1000
    assert ks_against(x, lambda u: u) == pytest.approx(0.0005)
    # no-jump draws sit beyond every finite point
    y = np.concatenate([(np.arange(500) + 0.5) / 1000, np.full(500, np.inf)])
    assert ks_against(y, lambda u: np.minimum(u, 0.5)) == pytest.approx(0.0005)


def test_zero_hamiltonian_ensemble_exact():
    ctx = zero_model(3, start=1).context()
    rep = run_ensemble(ctx, SimulationParams(t_end=1.0, seed=3), 500, [0.5, 1.0])
    assert rep.tv_distance == [0.0, 0.0]
    assert rep.mean_jumps == 0.0 and rep.max_jumps_observed == 0 and rep.expected_jumps == 0.0
    assert rep.empirical[0].weights == {"0": 0.0, "1": 1.0, "2": 0.0}


def test_two_level_checkpoint_and_jumps(tl_ctx):
    rep = run_ensemble(tl_ctx, SimulationParams(t_end=np.pi, seed=1), 20_000, [np.pi / 2])
    assert rep.empirical[0].weights["0"] == pytest.approx(0.5, abs=0.015)
    assert rep.tv_distance[0] < 0.015
    assert rep.mean_jumps == 1.0 and rep.jumps_se == 0.0
    assert rep.expected_jumps == pytest.approx(1.0, abs=1e-6)
    assert rep.explosion_count == rep.cemetery_count == 0


@pytest.mark.parametrize("name", list(bundled_models()))
def test_equivariance_envelopes(name):
    m = bundled_models()[name]
    ctx = m.context()
    n = 20_000
    rep = run_ensemble(ctx, SimulationParams(t_end=m.t_end, seed=9), n)
    assert max(rep.tv_distance) <= 4 / np.sqrt(n)
    assert sum(rep.envelope_violations) == 0
    assert rep.max_jumps_observed < 10_000
    assert abs(rep.mean_jumps - rep.expected_jumps) <= 3 * rep.jumps_se + 1e-6


def test_report_reproducible_and_paths_match_aggregates():
    ctx = random_hermitian(8, seed=4).context()
    params = SimulationParams(t_end=2.0, seed=77)
    a = run_ensemble(ctx, params, 3000, keep_paths=True)
    b = run_ensemble(ctx, params, 3000)
    assert a.to_json() == b.to_json()
    mean, se, mx = jump_count_statistics(a.trajectories, 2.0)
    assert (mean, mx) == (a.mean_jumps, a.max_jumps_observed)
    assert se == pytest.approx(a.jumps_se, rel=1e-9)


def test_default_checkpoints():
    assert default_checkpoints(0.0, 2.0) == pytest.approx([0.4, 0.8, 1.2, 1.6, 2.0])


def test_invalid_inputs(tl_ctx):
    from belljump.hilbert import ValidationError

    with pytest.raises(ValidationError):
        run_ensemble(tl_ctx, SimulationParams(t_end=1.0), 0)
    with pytest.raises(ValidationError):
        run_ensemble(tl_ctx, SimulationParams(t_end=1.0), 10, [2.0])
