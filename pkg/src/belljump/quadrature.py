"""Breadth-first adaptive Simpson quadrature for vector-valued integrands.

The integrand maps a 1-d array of times to an ``(T, L)`` array, so every
refinement level costs one batched call. Accepted leaves are kept as
Simpson panels ``(a, mid, b)`` with their three samples; summing the leaf
Simpson values gives the integral, and the quadratic through the samples
gives a consistent interpolant inside each leaf.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class QuadratureError(RuntimeError):
    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        self.interval = interval
        super().__init__(message if interval is None else f"{message} (worst subinterval {interval})")


class CeilingExceeded(Exception):
    """Raised internally when a running integral passes the requested ceiling."""


@dataclass
class SimpsonPanels:
    edges: np.ndarray  # (P + 1,)
    f0: np.ndarray  # (P, L) samples at left edge
    f1: np.ndarray  # (P, L) samples at midpoint
    f2: np.ndarray  # (P, L) samples at right edge
    owner: np.ndarray  # (P,) index of the initial interval each leaf came from

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def panel_integrals(self) -> np.ndarray:
        h = self.widths[:, None]
        return h * (self.f0 + 4.0 * self.f1 + self.f2) / 6.0

    def total(self) -> np.ndarray:
        return self.panel_integrals().sum(axis=0)


def partial_panel_integral(f0, f1, f2, h, s):
    """Integral of the quadratic through ``(0, f0), (1/2, f1), (1, f2)`` over ``[0, s]``, scaled by ``h``."""
    b = -3.0 * f0 + 4.0 * f1 - f2
    c = 2.0 * f0 - 4.0 * f1 + 2.0 * f2
    return h * s * (f0 + s * (b / 2.0 + s * c / 3.0))


def adaptive_simpson(
    f,
    breakpoints,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-12,
    *,
    mask=None,
    max_panels: int = 400_000,
    ceiling: float | None = None,
) -> SimpsonPanels:
    """Integrate ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    A panel is accepted when, for every component,
    ``|S2 - S1| / 15 <= max(abs_tol * h / span, rel_tol * |S2|)``.
    ``mask`` (shape ``(n_intervals, L)``) zeros components on whole initial
    intervals. With ``ceiling`` set, :class:`CeilingExceeded` is raised as
    soon as the running estimate of any component exceeds it.
    """
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
        raise ValueError("breakpoints must be strictly increasing with at least two entries")
    span = bp[-1] - bp[0]

    def evaluate(ts, own):
        vals = np.asarray(f(ts), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if mask is not None:
            vals = np.where(mask[own], 0.0, vals)
        return vals

    a, b = bp[:-1], bp[1:]
    owner = np.arange(a.size)
    m = 0.5 * (a + b)
    vals = evaluate(np.concatenate([a, m, b]), np.concatenate([owner, owner, owner]))
    n = a.size
    fa, fm, fb = vals[:n], vals[n : 2 * n], vals[2 * n :]

    leaves = []
    n_leaves = 0
    accepted_sum = 0.0
    while a.size:
        h = b - a
        m = 0.5 * (a + b)
        ql, qr = 0.5 * (a + m), 0.5 * (m + b)
        q = evaluate(np.concatenate([ql, qr]), np.concatenate([owner, owner]))
        fl, fr = q[: a.size], q[a.size :]
        s1 = h[:, None] * (fa + 4.0 * fm + fb) / 6.0
        s2 = h[:, None] * (fa + 4.0 * fl + 2.0 * fm + 4.0 * fr + fb) / 12.0
        err = np.abs(s2 - s1) / 15.0
        tol = np.maximum(abs_tol * (h / span)[:, None], rel_tol * np.abs(s2))
        ok = np.all(err <= tol, axis=1)
        # panels narrower than a few ulps cannot be refined further
        tiny = h <= 64.0 * np.spacing(np.maximum(np.abs(a), np.abs(b)))
        ok |= tiny
        if ceiling is not None:
            accepted_sum = accepted_sum + s2[ok].sum(axis=0)
            running = accepted_sum + s2[~ok].sum(axis=0)
            if np.any(running > ceiling):
                raise CeilingExceeded()
        if np.any(ok):
            leaves.append(
                (
                    np.concatenate([a[ok], m[ok]]),
                    np.concatenate([m[ok], b[ok]]),
                    np.concatenate([fa[ok], fm[ok]]),
                    np.concatenate([fl[ok], fr[ok]]),
                    np.concatenate([fm[ok], fb[ok]]),
                    np.concatenate([owner[ok], owner[ok]]),
                )
            )
            n_leaves += 2 * int(ok.sum())
        bad = ~ok
        if n_leaves + 4 * int(bad.sum()) > max_panels:
            worst = int(np.argmax(np.max(err[bad] - tol[bad], axis=1)))
            raise QuadratureError(
                f"adaptive Simpson did not converge within {max_panels} panels",
                (float(a[bad][worst]), float(b[bad][worst])),
            )
        a, m_, b = a[bad], m[bad], b[bad]
        fa, fl_, fm, fr_, fb = fa[bad], fl[bad], fm[bad], fr[bad], fb[bad]
        owner = owner[bad]
        # children: [a, m] with (fa, fl, fm) and [m, b] with (fm, fr, fb)
        a, b = np.concatenate([a, m_]), np.concatenate([m_, b])
        fa, fm, fb = np.concatenate([fa, fm]), np.concatenate([fl_, fr_]), np.concatenate([fm, fb])
        owner = np.concatenate([owner, owner])

    lo = np.concatenate([leaf[0] for leaf in leaves])
    hi = np.concatenate([leaf[1] for leaf in leaves])
    order = np.argsort(lo, kind="stable")
    edges = np.append(lo[order], hi[order][-1])
    return SimpsonPanels(
        edges=edges,
        f0=np.concatenate([leaf[2] for leaf in leaves])[order],
        f1=np.concatenate([leaf[3] for leaf in leaves])[order],
        f2=np.concatenate([leaf[4] for leaf in leaves])[order],
        owner=np.concatenate([leaf[5] for leaf in leaves])[order],
    )


def composite_simpson(values, t0: float, t1: float) -> np.ndarray:
    """Composite Simpson rule on a uniform grid with an odd number of samples along axis 0."""
    y = np.asarray(values, dtype=float)
    n = y.shape[0]
    if n < 3 or n % 2 == 0:
        raise ValueError("composite Simpson needs an odd number (>= 3) of samples")
    h = (t1 - t0) / (n - 1)
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum(axis=0) + 2.0 * y[2:-1:2].sum(axis=0))
