"""Deterministic predictions for the Monte Carlo engine.

Three independent routes to the law of ``X_t``:

* the master equation ``d rho_x/dt = sum_y rho_y sigma(x|y) - rho_x gamma_x``,
  integrated with an embedded Runge-Kutta 4(5) pair;
* the series ``sum_n A_n`` for the integral equation whose minimal
  solution is the law of the process (``A_n`` = probability of being at
  ``x`` after exactly ``n`` jumps);
* the expected number of jumps, ``int sum_x P(X_s = x) gamma_x(s) ds``.

Products ``rho_y * sigma(x|y)`` are always formed as
``flow[x, y] * (rho_y / mu_y)``, with the flow numerator taken straight from
the matrix element; the ratio is finite even where ``sigma`` is not.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.integrate import simpson, solve_ivp

from .rates import DistributionSnapshot, RateContext
from .sampler import HazardTable

MASTER_ODE = "MASTER_ODE"
PICARD = "PICARD"

MASTER_RTOL = 1e-9
MASTER_ATOL = 1e-13
PICARD_STOP = 1e-8


class OracleError(RuntimeError):
    pass


class PicardWarning(UserWarning):
    pass


@dataclass
class OracleSolution:
    times: np.ndarray
    distributions: List[DistributionSnapshot]
    method: str
    labels: tuple = ()

    def matrix(self) -> np.ndarray:
        return np.array([d.as_array(self.labels) for d in self.distributions])


@dataclass
class PicardIterate:
    n: int
    times: np.ndarray
    partial_sums: List[np.ndarray]  # partial_sums[N] has shape (T, L): sum_{n <= N} A_n
    labels: tuple
    converged: bool
    increments: List[float] = field(default_factory=list)  # sup-norm of each A_n

    def snapshots(self, N: int | None = None) -> List[DistributionSnapshot]:
        S = self.partial_sums[self.n if N is None else N]
        return [DistributionSnapshot(float(t), dict(zip(self.labels, row.tolist())))
                for t, row in zip(self.times, S)]

    def as_solution(self) -> OracleSolution:
        return OracleSolution(self.times, self.snapshots(), PICARD, self.labels)


def make_grid(t0: float, t_end: float, grid_step: float) -> np.ndarray:
    if not t_end > t0:
        raise ValueError("need t_end > t0")
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    n = max(1, int(np.ceil((t_end - t0) / grid_step - 1e-9)))
    return np.linspace(t0, t_end, n + 1)


def _ratio(rho: np.ndarray, mu: np.ndarray, thr: float, at_node: float) -> np.ndarray:
    safe = mu > thr
    return np.where(safe, rho / np.where(safe, mu, 1.0), at_node)


def master_rhs(ctx: RateContext, t: float, rho: np.ndarray) -> np.ndarray:
    """Right-hand side of the master equation at state ``rho``.

    At a node the ratio ``rho/mu`` is replaced by 1, its value along the
    equivariant solution.
    """
    mu = ctx.weights(t)
    flow = ctx.flow(t)  # [dest, src]
    q = _ratio(rho, mu, ctx.threshold, 1.0)
    return flow @ q - q * flow.sum(axis=0)


def solve_master_equation(ctx: RateContext, t0: float, t_end: float, grid_step: float) -> OracleSolution:
    """Integrate the master equation from ``mu_t0`` with Dormand-Prince RK45 (rtol 1e-9)."""
    grid = make_grid(t0, t_end, grid_step)
    rho0 = ctx.weights(float(t0))
    sol = solve_ivp(
        lambda t, y: master_rhs(ctx, t, y),
        (float(grid[0]), float(grid[-1])),
        rho0,
        method="RK45",
        t_eval=grid,
        rtol=MASTER_RTOL,
        atol=MASTER_ATOL,
    )
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if sol.t.size else float(t0)
        rhs = np.abs(master_rhs(ctx, t_fail, sol.y[:, -1] if sol.y.size else rho0))
        lab = ctx.labels[int(np.argmax(rhs))]
        raise OracleError(f"master equation failed at t={t_fail:.12g} (label {lab!r}): {sol.message}")
    rho = np.maximum(sol.y.T, 0.0)
    dists = [DistributionSnapshot(float(t), dict(zip(ctx.labels, row.tolist()))) for t, row in zip(grid, rho)]
    return OracleSolution(grid, dists, MASTER_ODE, tuple(ctx.labels))


def solve_integral_equation_picard(ctx: RateContext, t0: float, t_end: float, grid_step: float,
                                   n_max: int = 12, table: HazardTable | None = None) -> PicardIterate:
    """Partial sums of the jump-number series on a fixed grid.

    ``A_0(t, x) = mu_t0(x) exp(-Gamma_{t0,x}(t))`` and each ``A_n`` integrates
    ``A_{n-1}(s, y) sigma_s(x|y) exp(-Gamma_{s,x}(t))`` over ``s`` with the
    trapezoid rule, carried forward one grid cell at a time. Survival
    factors come from the sampler's hazard table.
    """
    grid = make_grid(t0, t_end, grid_step)
    if table is None:
        table = HazardTable(ctx, grid[0], grid[-1])
    L = len(ctx.labels)
    thr = ctx.threshold
    mu = ctx.weights(grid)  # (T, L)
    flow = ctx.flow(grid)  # (T, dest, src)
    h = np.diff(grid)
    ks = np.arange(L)
    # survival over each cell, and from t0 to each grid point
    cell = np.exp(-table.hazard(grid[:-1, None], ks[None, :], grid[1:, None]))
    from_start = np.exp(-table.hazard(np.full((grid.size, 1), grid[0]), ks[None, :], grid[:, None]))
    from_start[0] = 1.0
    A = mu[0][None, :] * from_start
    partial = [A.copy()]
    increments = [float(np.abs(A).max())]
    converged = False
    for n in range(1, n_max + 1):
        r = _ratio(A, mu, thr, 0.0)
        f = np.einsum("jxy,jy->jx", flow, r)
        An = np.zeros_like(A)
        for i in range(grid.size - 1):
            An[i + 1] = cell[i] * (An[i] + 0.5 * h[i] * f[i]) + 0.5 * h[i] * f[i + 1]
        A = An
        partial.append(partial[-1] + A)
        inc = float(np.abs(A).max())
        increments.append(inc)
        if inc < PICARD_STOP:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"Picard series not converged after {n_max} terms (last increment {increments[-1]:.3e})",
            PicardWarning,
            stacklevel=2,
        )
    return PicardIterate(len(partial) - 1, grid, partial, tuple(ctx.labels), converged, increments)


def expected_jump_count(ctx: RateContext, t0: float, t: float, law: OracleSolution) -> float:
    """``E S(t) = int_{t0}^{t} sum_x law_s(x) gamma_x(s) ds`` by Simpson on the law's grid."""
    times = np.asarray(law.times)
    sel = (times >= t0 - 1e-12) & (times <= t + 1e-12)
    ts = times[sel]
    if ts.size < 2:
        raise ValueError("the law's grid has fewer than two points in [t0, t]")
    if abs(ts[0] - t0) > 1e-9 * max(1.0, abs(t0)) or abs(ts[-1] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError("t0 and t must be grid points of the law")
    rho = np.array([law.distributions[i].as_array(ctx.labels) for i in np.flatnonzero(sel)])
    mu = ctx.weights(ts)
    out = ctx.flow(ts).sum(axis=-2)  # total outgoing numerator per source
    q = _ratio(rho, mu, ctx.threshold, 1.0)
    integrand = (q * out).sum(axis=1)
    return float(simpson(integrand, x=ts))
