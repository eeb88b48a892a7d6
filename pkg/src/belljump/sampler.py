"""Trajectory sampling for Bell's jump process.

Holding times are drawn by inverse transform on the cumulative hazard:
draw ``E ~ Exp(1)`` and solve ``Gamma_{t,x}(u) = E``. Thinning is not an
option because the rates blow up near nodes and admit no dominating
constant.

For ensembles the hazard of every label is tabulated once over the whole
window (:class:`HazardTable`): adaptive Simpson leaves, split at the times
where a label crosses the node threshold. ``Gamma_{t,x}(u)`` is then a
difference of two table lookups and each holding time costs a binary
search plus a bracketed bisection inside one leaf. The table is the
``HazardIntegral`` of the whole window, anchored at ``t0``.

Random numbers come from one numpy Philox stream per trajectory, keyed by
the seed with the trajectory index in the high counter word, so a
trajectory does not depend on which worker simulates it or on what else
that worker runs. Trajectories are simulated in lockstep batches
(:func:`simulate_batch`); batches always cover fixed index ranges so
floating-point evaluation order is independent of the worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .hilbert import ValidationError
from .quadrature import CeilingExceeded, QuadratureError, adaptive_simpson, partial_panel_integral
from .rates import CEMETERY, INFINITE, RateContext, _marker

FROZEN = _marker("FROZEN")

REACHED_HORIZON = "REACHED_HORIZON"
EXPLODED = "EXPLODED"
HIT_CEMETERY = "HIT_CEMETERY"

HAZARD_CEILING = 700.0
NODE_SCAN_STEPS = 1024
BATCH_SIZE = 4096
_INITIAL_PANELS = 64
_CEMETERY_CODE = -1


@dataclass(frozen=True)
class SimulationParams:
    t0: float = 0.0
    t_end: float = 1.0
    max_jumps: int = 10_000
    quad_rel_tol: float = 1e-9
    quad_abs_tol: float = 1e-12
    root_tol: float = 1e-10
    seed: int = 0
    trajectory_index: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.t_end)) or self.t_end <= self.t0:
            raise ValidationError(f"need t_end > t0, got t0={self.t0}, t_end={self.t_end}", "t_end")
        if int(self.max_jumps) < 1:
            raise ValidationError("max_jumps must be >= 1", "max_jumps")
        for name in ("quad_rel_tol", "quad_abs_tol", "root_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive", name)
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer", "seed")
        if int(self.trajectory_index) < 0:
            raise ValidationError("trajectory_index must be nonnegative", "trajectory_index")


@dataclass
class Trajectory:
    index: int
    events: List[Tuple[float, object]]
    status: str
    final_time: float
    diagnostic: Optional[dict] = None

    @property
    def n_jumps(self) -> int:
        return len(self.events) - 1

    def to_json(self) -> dict:
        out = {
            "index": self.index,
            "status": self.status,
            "events": [[t, lab] for t, lab in self.events],
        }
        if self.diagnostic is not None:
            out["diagnostic"] = self.diagnostic
        return out


def position_at(traj: Trajectory, t: float):
    """Right-continuous path lookup; CEMETERY after a non-horizon end."""
    t0 = traj.events[0][0]
    if t < t0:
        raise ValueError(f"t={t} precedes the start time {t0}")
    if traj.status != REACHED_HORIZON and t >= traj.final_time:
        return CEMETERY
    times = [ev[0] for ev in traj.events]
    n = int(np.searchsorted(times, t, side="right")) - 1
    return traj.events[n][1]


# --------------------------------------------------------------------------
# nodes


def _bisect(g, lo: float, hi: float, tol: float) -> Tuple[float, float]:
    """Shrink ``[lo, hi]`` with ``g(lo)`` False and ``g(hi)`` True to width ``tol``."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def node_intervals(ctx: RateContext, t0: float, t1: float, root_tol: float = 1e-10,
                   steps: int = NODE_SCAN_STEPS) -> List[List[Tuple[float, float]]]:
    """Sub-threshold excursions of every label on ``[t0, t1]``.

    Returns, per label, a list of ``(lo, hi)`` where ``lo`` is the last
    admissible time before the excursion (``t0`` if it starts there) and
    ``hi`` the first admissible time after it (``t1`` if it lasts to the
    end). Crossings are found by a sign scan on ``steps`` cells refined by
    bisection; interior minima of the weight (sign change of its
    derivative) are also inspected, so a double zero inside a cell is not
    missed. Two separate minima inside one cell are beyond resolution.
    """
    thr = ctx.threshold
    grid = np.linspace(t0, t1, steps + 1)
    mu = ctx.weights(grid)
    dmu = ctx.derivative(grid)
    out = []
    for k in range(mu.shape[1]):
        def below(s, k=k):
            return ctx.weights(s)[k] <= thr

        def rising(s, k=k):
            return ctx.derivative(s)[k] >= 0.0

        low = mu[:, k] <= thr
        events = []  # ("down", lo) = last admissible before; ("up", hi) = first admissible after
        if low[0]:
            events.append(("down", t0))
        for i in range(steps):
            a, b = grid[i], grid[i + 1]
            if low[i] and not low[i + 1]:
                lo, hi = _bisect(lambda s: not below(s), a, b, root_tol)
                events.append(("up", hi))
            elif not low[i] and low[i + 1]:
                lo, hi = _bisect(below, a, b, root_tol)
                events.append(("down", lo))
            elif not low[i] and not low[i + 1] and dmu[i, k] < 0.0 <= dmu[i + 1, k]:
                _, m = _bisect(rising, a, b, root_tol)
                if below(m):
                    lo, _ = _bisect(below, a, m, root_tol)
                    _, hi = _bisect(lambda s: not below(s), m, b, root_tol)
                    events.append(("down", lo))
                    events.append(("up", hi))
        intervals = []
        start = None
        for kind, s in events:
            if kind == "down":
                start = s
            elif start is not None:
                intervals.append((start, s))
                start = None
        if start is not None:
            intervals.append((start, t1))
        out.append(intervals)
    return out


def first_node_time(ctx: RateContext, t: float, x, t_end: float, root_tol: float = 1e-10,
                    steps: int = NODE_SCAN_STEPS):
    """First node of ``x`` after ``t`` on ``(t, t_end]``, or None.

    The excursion below the node threshold is located by the scan of
    :func:`node_intervals`; the returned time is the minimizer of the
    weight inside that excursion (the zero itself for an isolated node),
    or the entry time when the weight stays flat below threshold.
    Excursions narrower than the scan cell without an interior derivative
    sign change at the grid points are not resolved.
    """
    k = ctx.pov.index(x)
    if ctx.weights(float(t))[k] <= ctx.threshold:
        raise ValidationError(f"({t}, {x!r}) is itself a node")
    ivals = node_intervals(ctx, float(t), float(t_end), root_tol, steps)[k]
    if not ivals:
        return None
    lo, hi = ivals[0]

    def rising(s):
        return ctx.derivative(s)[k] >= 0.0

    if rising(lo) or not rising(hi):
        # flat excursion, or the window ends inside it while still falling
        if not rising(hi) and hi >= t_end:
            return float(t_end) if ctx.weights(float(t_end))[k] <= ctx.threshold else lo
        return lo
    _, m = _bisect(rising, lo, hi, root_tol)
    return m


# --------------------------------------------------------------------------
# hazard


def _total_rates(ctx: RateContext, ts) -> np.ndarray:
    """gamma_x(t) for all labels; nodes evaluated with the threshold as denominator."""
    mu = ctx.weights(ts)
    out = ctx.flow(ts).sum(axis=-2)
    return out / np.maximum(mu, max(ctx.threshold, np.finfo(float).tiny))


class HazardTable:
    """Cumulative hazard of every label on ``[t0, t_end]``.

    ``G[p, x]`` is the integral of ``gamma_x`` from ``t0`` to the left edge
    of leaf ``p`` with node leaves contributing nothing; ``blocked[p, x]``
    marks leaves where ``x`` is a node, across which the hazard is infinite.
    """

    def __init__(self, ctx: RateContext, t0: float, t_end: float, rel_tol: float = 1e-9,
                 abs_tol: float = 1e-12, root_tol: float = 1e-10, max_panels: int = 400_000):
        self.ctx = ctx
        self.t0, self.t_end = float(t0), float(t_end)
        self.root_tol = float(root_tol)
        self.nodes = node_intervals(ctx, self.t0, self.t_end, root_tol)
        cuts = [s for ivals in self.nodes for iv in ivals for s in iv]
        bp = np.unique(np.concatenate([np.linspace(self.t0, self.t_end, _INITIAL_PANELS + 1), cuts]))
        bp = bp[(bp >= self.t0) & (bp <= self.t_end)]
        mids = 0.5 * (bp[:-1] + bp[1:])
        mask = np.zeros((mids.size, len(ctx.labels)), dtype=bool)
        for k, ivals in enumerate(self.nodes):
            for lo, hi in ivals:
                mask[(mids > lo) & (mids < hi), k] = True
        panels = adaptive_simpson(
            lambda ts: _total_rates(ctx, ts), bp, rel_tol, abs_tol, mask=mask, max_panels=max_panels
        )
        self.edges = panels.edges
        self.widths = panels.widths
        self.f0, self.f1, self.f2 = panels.f0, panels.f1, panels.f2
        self.blocked = mask[panels.owner]
        inc = panels.panel_integrals()
        self.G = np.vstack([np.zeros((1, inc.shape[1])), np.cumsum(inc, axis=0)])
        P, L = self.blocked.shape
        nb = np.full((P + 1, L), P, dtype=np.int64)
        for p in range(P - 1, -1, -1):
            nb[p] = np.where(self.blocked[p], p, nb[p + 1])
        self.next_block = nb
        self._bisect_iters = int(np.clip(np.ceil(np.log2(self.widths.max() / self.root_tol)) + 2, 8, 64))

    @property
    def n_panels(self) -> int:
        return self.widths.size

    def _panel(self, t) -> np.ndarray:
        p = np.searchsorted(self.edges, t, side="right") - 1
        return np.clip(p, 0, self.n_panels - 1)

    def _partial(self, p, k, s):
        return partial_panel_integral(self.f0[p, k], self.f1[p, k], self.f2[p, k], self.widths[p], s)

    def cumulative(self, t, k) -> np.ndarray:
        """Running hazard from ``t0`` (nodes contributing zero)."""
        t = np.asarray(t, dtype=float)
        p = self._panel(t)
        s = np.clip((t - self.edges[p]) / self.widths[p], 0.0, 1.0)
        return self.G[p, k] + self._partial(p, k, s)

    def hazard(self, t, k, u) -> np.ndarray:
        """``Gamma_{t,x}(u)`` with ``np.inf`` when a node of ``x`` lies in ``(t, u]``."""
        t, k, u = np.broadcast_arrays(np.asarray(t, float), np.asarray(k), np.asarray(u, float))
        pt, pu = self._panel(t), self._panel(u)
        out = self.cumulative(u, k) - self.cumulative(t, k)
        crosses = self.next_block[pt, k] <= pu
        return np.where(crosses, np.inf, np.maximum(out, 0.0))

    def solve(self, t, k, E):
        """Holding-time inversion: smallest ``u > t`` with ``Gamma_{t,x}(u) = E``.

        Returns ``(u, at_node)``; ``u`` is ``inf`` when no jump happens by
        ``t_end``. ``at_node`` flags draws clamped to the last admissible
        time before a node (the hazard diverges there, so the clamp carries
        probability of order ``exp(-Gamma)`` at the threshold).
        """
        t = np.asarray(t, dtype=float)
        k = np.asarray(k, dtype=np.int64)
        E = np.asarray(E, dtype=float)
        p = self._panel(t)
        s_t = np.clip((t - self.edges[p]) / self.widths[p], 0.0, 1.0)
        start = self.G[p, k] + self._partial(p, k, s_t)
        target = start + E
        nb = self.next_block[p, k]
        g_end = self.G[nb, k]
        u = np.full(t.shape, np.inf)
        at_node = np.zeros(t.shape, dtype=bool)

        immediate = self.blocked[p, k]
        u[immediate] = np.nextafter(t[immediate], np.inf)
        at_node |= immediate

        clamp = ~immediate & (target >= g_end) & (nb < self.n_panels)
        u[clamp] = self.edges[nb[clamp]]
        at_node |= clamp

        solve = ~immediate & (target < g_end)
        if np.any(solve):
            ts, ks, ps, tg, st = t[solve], k[solve], p[solve], target[solve], s_t[solve]
            j = np.empty(ts.size, dtype=np.int64)
            for kk in np.unique(ks):
                sel = ks == kk
                j[sel] = np.searchsorted(self.G[:, kk], tg[sel], side="right") - 1
            j = np.clip(np.maximum(j, ps), 0, self.n_panels - 1)
            rem = tg - self.G[j, ks]
            lo = np.where(j == ps, st, 0.0)
            hi = np.ones_like(lo)
            f0, f1, f2, h = self.f0[j, ks], self.f1[j, ks], self.f2[j, ks], self.widths[j]
            for _ in range(self._bisect_iters):
                mid = 0.5 * (lo + hi)
                up = partial_panel_integral(f0, f1, f2, h, mid) >= rem
                hi = np.where(up, mid, hi)
                lo = np.where(up, lo, mid)
            us = self.edges[j] + hi * h
            us = np.where(us > ts, us, np.nextafter(ts, np.inf))
            u[solve] = us
        return u, at_node


def _check_window(t, u, table: HazardTable):
    if not (table.t0 <= t and u <= table.t_end):
        raise ValueError(f"[{t}, {u}] is outside the table window [{table.t0}, {table.t_end}]")


def cumulative_hazard(ctx: RateContext, t: float, x, u: float, params: SimulationParams | None = None):
    """``Gamma_{t,x}(u)``: adaptive Simpson of the total rate of ``x`` over ``[t, u]``.

    INFINITE if ``x`` becomes a node in ``(t, u]`` or the integral passes
    the ceiling of 700, beyond which ``exp(-Gamma)`` underflows anyway.
    """
    params = params or SimulationParams(t0=float(t), t_end=float(u))
    k = ctx.pov.index(x)
    if not u > t:
        raise ValueError("need u > t")
    if ctx.weights(float(t))[k] <= ctx.threshold:
        raise ValidationError(f"({t}, {x!r}) is a node")
    if node_intervals(ctx, float(t), float(u), params.root_tol)[k]:
        return INFINITE
    bp = np.linspace(float(t), float(u), 9)
    try:
        panels = adaptive_simpson(
            lambda ts: _total_rates(ctx, ts)[:, k],
            bp,
            params.quad_rel_tol,
            params.quad_abs_tol,
            ceiling=HAZARD_CEILING,
        )
    except CeilingExceeded:
        return INFINITE
    val = float(panels.total()[0])
    return INFINITE if val > HAZARD_CEILING else val


def sample_holding_time(ctx: RateContext, t: float, x, params: SimulationParams, rng,
                        table: HazardTable | None = None):
    """Draw the time of the next jump from ``(t, x)``, or FROZEN if none before ``t_end``."""
    k = ctx.pov.index(x)
    if ctx.weights(float(t))[k] <= ctx.threshold:
        raise ValidationError(f"({t}, {x!r}) is a node")
    if table is None:
        table = HazardTable(ctx, t, params.t_end, params.quad_rel_tol, params.quad_abs_tol, params.root_tol)
    _check_window(t, t, table)
    E = -math.log1p(-rng.random())
    u, _ = table.solve(np.array([t]), np.array([k]), np.array([E]))
    if not np.isfinite(u[0]) or u[0] > params.t_end:
        return FROZEN
    return float(u[0])


def sample_holding_times(ctx: RateContext, t: float, x, params: SimulationParams, rng, size: int,
                         table: HazardTable | None = None) -> np.ndarray:
    """``size`` independent holding times from ``(t, x)``; ``inf`` marks FROZEN draws."""
    k = ctx.pov.index(x)
    if ctx.weights(float(t))[k] <= ctx.threshold:
        raise ValidationError(f"({t}, {x!r}) is a node")
    if table is None:
        table = HazardTable(ctx, t, params.t_end, params.quad_rel_tol, params.quad_abs_tol, params.root_tol)
    _check_window(t, t, table)
    E = -np.log1p(-rng.random(size))
    u, _ = table.solve(np.full(size, float(t)), np.full(size, k), E)
    u[u > params.t_end] = np.inf
    return u


def _pick(weights: np.ndarray, uniform: np.ndarray) -> np.ndarray:
    """Inverse-CDF categorical draw along the last axis in canonical label order."""
    cdf = np.cumsum(weights, axis=-1)
    v = uniform * cdf[..., -1]
    return np.minimum((cdf <= v[..., None]).sum(axis=-1), weights.shape[-1] - 1)


def sample_destination(ctx: RateContext, t: float, x, rng):
    """Draw the jump destination from ``(t, x)``; CEMETERY if the total rate is 0 or INFINITE."""
    k = ctx.pov.index(x)
    mu = ctx.weights(float(t))
    if mu[k] <= ctx.threshold:
        return CEMETERY
    num = ctx.flow_from(float(t), k)
    num[mu <= ctx.threshold] = 0.0
    if num.sum() <= 0.0:
        return CEMETERY
    return ctx.labels[int(_pick(num, np.asarray(rng.random())))]


# --------------------------------------------------------------------------
# engine


def trajectory_stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory; independent of every other index."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=int(index) << 128))


class _Uniforms:
    def __init__(self, seed, indices, width=17):
        self.seed = seed
        self.indices = np.asarray(indices)
        self.buf = self._draw(np.arange(self.indices.size), width)

    def _draw(self, rows, width):
        return np.stack([trajectory_stream(self.seed, self.indices[r]).random(width) for r in rows]) \
            if len(rows) else np.empty((0, width))

    def take(self, rows, position):
        if position >= self.buf.shape[1]:
            width = max(2 * self.buf.shape[1], position + 1)
            grown = np.full((self.buf.shape[0], width), np.nan)
            grown[:, : self.buf.shape[1]] = self.buf
            grown[rows] = self._draw(rows, width)
            self.buf = grown
        col = self.buf[rows, position]
        if np.any(np.isnan(col)):
            need = rows[np.isnan(col)]
            self.buf[need] = self._draw(need, self.buf.shape[1])
            col = self.buf[rows, position]
        return col


@dataclass
class BatchResult:
    indices: np.ndarray
    status: np.ndarray  # object array of status strings
    final_time: np.ndarray
    n_jumps: np.ndarray
    positions: np.ndarray  # (N, C) label index or -1 for cemetery
    min_weight: float
    clamped_at_node: int
    first_jump: np.ndarray  # (N,) time of the first jump, inf if none
    trajectories: Optional[List[Trajectory]] = None
    diagnostics: List[dict] = field(default_factory=list)


def sample_initial(ctx: RateContext, t0: float, uniforms: np.ndarray) -> np.ndarray:
    """Initial labels from ``mu_t0`` restricted to the admissible set."""
    mu = ctx.weights(float(t0)).copy()
    mu[mu <= ctx.threshold] = 0.0
    if mu.sum() <= 0:
        raise ValidationError(f"initial distribution at t0={t0} is concentrated on nodes")
    return _pick(np.broadcast_to(mu, uniforms.shape + mu.shape), uniforms)


def simulate_batch(ctx: RateContext, params: SimulationParams, indices: Sequence[int],
                   table: HazardTable | None = None, checkpoints: Sequence[float] = (),
                   keep_paths: bool = True) -> BatchResult:
    """Simulate the trajectories ``indices`` together, one jump per round.

    Each round draws an exponential and inverts the tabulated hazard for
    every live trajectory, then draws destinations from the exact rates at
    the jump times.
    """
    if table is None:
        table = HazardTable(ctx, params.t0, params.t_end, params.quad_rel_tol,
                            params.quad_abs_tol, params.root_tol)
    if table.t0 > params.t0 or table.t_end < params.t_end:
        raise ValueError("hazard table does not cover the simulation window")
    idx = np.asarray(indices, dtype=np.int64)
    N = idx.size
    cps = np.asarray(sorted(checkpoints), dtype=float)
    thr = ctx.threshold
    rng = _Uniforms(params.seed, idx)

    x = sample_initial(ctx, params.t0, rng.take(np.arange(N), 0))
    mu0 = ctx.weights(float(params.t0))
    min_weight = float(mu0[x].min()) if N else math.inf
    t = np.full(N, float(params.t0))
    n_jumps = np.zeros(N, dtype=np.int64)
    first_jump = np.full(N, np.inf)
    status = np.full(N, REACHED_HORIZON, dtype=object)
    final_time = np.full(N, float(params.t_end))
    if cps.size and (cps[0] < params.t0 or cps[-1] > params.t_end):
        raise ValidationError("checkpoints must lie in [t0, t_end]", "checkpoints")
    positions = np.repeat(x[:, None], cps.size, axis=1)
    log_rows, log_t, log_x = [np.arange(N)], [t.copy()], [x.copy()]
    diagnostics = []
    clamped = 0

    live = np.arange(N)
    rnd = 0
    while live.size:
        rnd += 1
        E = -np.log1p(-rng.take(live, 2 * rnd - 1))
        u, at_node = table.solve(t[live], x[live], E)
        jumped = np.isfinite(u) & (u <= params.t_end)
        clamped += int((at_node & jumped).sum())
        live = live[jumped]
        if not live.size:
            break
        u, k = u[jumped], x[live]
        if rnd == 1:
            first_jump[live] = u
        mu = ctx.weights(u)
        num = ctx.flow_from(u, k)
        num[mu <= thr] = 0.0
        own = np.take_along_axis(mu, k[:, None], axis=1)[:, 0]
        tot = num.sum(axis=1)
        dead = (own <= thr) | (tot <= 0.0)
        y = _pick(num, rng.take(live, 2 * rnd))
        y = np.where(dead, _CEMETERY_CODE, y)
        min_weight = min(min_weight, float(own.min()))
        arrived = ~dead
        if np.any(arrived):
            min_weight = min(min_weight, float(np.take_along_axis(mu[arrived], y[arrived, None], 1).min()))
        t[live] = u
        x[live] = np.where(dead, x[live], y)
        n_jumps[live[~dead]] += 1
        if cps.size:
            after = cps[None, :] >= u[:, None]
            positions[live] = np.where(after, y[:, None], positions[live])
        log_rows.append(live.copy())
        log_t.append(u.copy())
        log_x.append(y.copy())

        for r, tu, kk, ow, tt in zip(live[dead], u[dead], k[dead], own[dead], tot[dead]):
            status[r] = HIT_CEMETERY
            final_time[r] = tu
            diagnostics.append({
                "index": int(idx[r]), "event": HIT_CEMETERY, "time": float(tu),
                "label": ctx.labels[int(kk)], "weight": float(ow), "total_flow": float(tt),
            })
        exploded = arrived & (n_jumps[live] >= params.max_jumps)
        for r, tu in zip(live[exploded], u[exploded]):
            status[r] = EXPLODED
            final_time[r] = tu
            diagnostics.append({
                "index": int(idx[r]), "event": EXPLODED, "time": float(tu), "jumps": int(n_jumps[r]),
            })
        if cps.size and np.any(exploded):
            rows = live[exploded]
            positions[rows] = np.where(cps[None, :] >= u[exploded][:, None], _CEMETERY_CODE, positions[rows])
        live = live[arrived & ~exploded]

    trajectories = None
    if keep_paths:
        rows = np.concatenate(log_rows)
        times = np.concatenate(log_t)
        labs = np.concatenate(log_x)
        order = np.argsort(rows, kind="stable")
        rows, times, labs = rows[order], times[order], labs[order]
        bounds = np.searchsorted(rows, np.arange(N + 1))
        diag_by_index = {d["index"]: d for d in diagnostics}
        trajectories = []
        labels = ctx.labels
        for r in range(N):
            sl = slice(bounds[r], bounds[r + 1])
            evs = [(float(tt), labels[int(ll)]) for tt, ll in zip(times[sl], labs[sl]) if ll != _CEMETERY_CODE]
            trajectories.append(Trajectory(
                index=int(idx[r]), events=evs, status=str(status[r]),
                final_time=float(final_time[r]), diagnostic=diag_by_index.get(int(idx[r])),
            ))
    return BatchResult(
        indices=idx, status=status, final_time=final_time, n_jumps=n_jumps,
        positions=positions, min_weight=min_weight, clamped_at_node=clamped, first_jump=first_jump,
        trajectories=trajectories, diagnostics=diagnostics,
    )


def simulate_trajectory(ctx: RateContext, params: SimulationParams,
                        table: HazardTable | None = None) -> Trajectory:
    """One trajectory, index ``params.trajectory_index``."""
    res = simulate_batch(ctx, params, [params.trajectory_index], table)
    return res.trajectories[0]
