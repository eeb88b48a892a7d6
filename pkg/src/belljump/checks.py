"""Validators for the standing hypotheses on ``(H, P, psi_0)``."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .hilbert import HermitianOperator, Povm
from .oracle import make_grid
from .quadrature import composite_simpson
from .rates import RateContext

HS_TOL = 1e-9
CONTRACTION_RTOL = 1e-10


@dataclass
class AssumptionReport:
    a2_integral: float
    hs_norm: float
    hs_bound_ok: bool
    worst_ratio: float
    domain_condition: str = "trivially satisfied (finite dimension)"
    t0: float = 0.0
    t1: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def hs_norm(H: HermitianOperator) -> float:
    """``sqrt(tr H^2)``."""
    return float(np.linalg.norm(H.entries, "fro"))


def a2_integrand(ctx: RateContext, ts) -> np.ndarray:
    """``sum_{x,y} |<psi_t|P(y) H P(x) psi_t>|`` at each time in ``ts``."""
    return np.abs(ctx.matrix_elements(np.asarray(ts, dtype=float))).sum(axis=(-2, -1))


def check_a2(ctx: RateContext, t0: float, t1: float, grid_step: float = 1e-3) -> AssumptionReport:
    """Value of the integrability condition on ``[t0, t1]`` by composite Simpson.

    The grid is refined to an even number of cells no coarser than ``grid_step``.
    ``hs_bound_ok`` and ``worst_ratio`` are filled from :func:`check_hs_inequality`
    evaluated on ``psi_t`` along the same grid.
    """
    grid = make_grid(t0, t1, grid_step)
    if grid.size % 2 == 0:
        grid = np.linspace(grid[0], grid[-1], grid.size + 1)
    vals = a2_integrand(ctx, grid)
    total = float(composite_simpson(vals, grid[0], grid[-1]))
    norm = hs_norm(ctx.H)
    rhs = ctx.mass * norm
    ratio = float(vals.max() / rhs) if rhs > 0 else (0.0 if vals.max() == 0 else np.inf)
    return AssumptionReport(
        a2_integral=total,
        hs_norm=norm,
        hs_bound_ok=bool(np.all(vals <= rhs + HS_TOL)),
        worst_ratio=ratio,
        t0=float(t0),
        t1=float(t1),
    )


def hs_lhs(psi: np.ndarray, H: HermitianOperator, pov: Povm) -> np.ndarray:
    """``sum_{x,y} |<psi|P(x) H P(y) psi>|`` for a batch of states (rows of ``psi``)."""
    proj = pov.apply(psi)  # (..., L, d)
    m = np.einsum("...yi,ij,...xj->...yx", proj.conj(), H.entries, proj)
    return np.abs(m).sum(axis=(-2, -1))


def check_hs_inequality(H: HermitianOperator, pov: Povm, trials: int = 100, rng=None):
    """Check ``sum_{x,y} |<psi|P(x)HP(y)psi>| <= |psi|^2 sqrt(tr H^2)`` on random normalized states.

    Returns ``(ok, worst_ratio)``; the ratio is 0 when both sides vanish.
    """
    rng = np.random.default_rng(rng)
    d = H.dim
    psi = rng.standard_normal((trials, d)) + 1j * rng.standard_normal((trials, d))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    lhs = hs_lhs(psi, H, pov)
    rhs = hs_norm(H)
    ok = bool(np.all(lhs <= rhs + HS_TOL))
    if rhs > 0:
        worst = float(lhs.max() / rhs)
    else:
        worst = 0.0 if lhs.max() <= HS_TOL else float("inf")
    return ok, worst


def check_povm_contraction(C, pov: Povm, x) -> bool:
    """``tr C^* P(x) C <= tr C^* C`` within a relative tolerance of 1e-10."""
    C = np.asarray(C, dtype=complex)
    P = pov.elements[pov.index(x)]
    lhs = float(np.real(np.trace(C.conj().T @ P @ C)))
    rhs = float(np.real(np.trace(C.conj().T @ C)))
    return lhs <= rhs + CONTRACTION_RTOL * max(rhs, 1.0) and lhs >= -CONTRACTION_RTOL * max(rhs, 1.0)


def rate_balance_residual(ctx: RateContext, t) -> np.ndarray:
    """``mu'_t(x) - sum_y (mu_t(y) sigma_t(x|y) - mu_t(x) sigma_t(y|x))`` for every label.

    The products ``mu sigma`` are the flow numerators themselves, so the
    residual is finite at nodes too.
    """
    flow = ctx.flow(t)  # [..., dest, src]
    net = flow.sum(axis=-1) - flow.sum(axis=-2)
    return ctx.derivative(t) - net
