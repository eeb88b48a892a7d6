"""Bell's jump rates and the equivariant distribution.

With hbar = 2 the rate from ``x`` to ``y`` at time ``t`` is

    sigma_t(y|x) = [Im <psi_t|P(y) H P(x) psi_t>]^+ / <psi_t|P(x) psi_t>

and it is declared INFINITE when ``x`` is a node, i.e. its weight is at or
below ``node_epsilon * |psi_0|^2``. INFINITE is a marker object, never a
float, so every consumer has to branch on it.

The numerator matrix ``flow[y, x] = [Im <psi|P(y) H P(x) psi>]^+`` is the
quantity most callers want: ``mu_t(x) * sigma_t(y|x)`` equals it exactly
whenever ``x`` is not a node, which lets the oracles avoid ``inf * 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Hashable

import numpy as np

from .hilbert import (
    HermitianOperator,
    Povm,
    SpectralDecomposition,
    StateVector,
    ValidationError,
    clamp_weights,
    propagate_many,
    spectral_decompose,
)

DEFAULT_NODE_EPSILON = 1e-12
MAX_NODE_EPSILON = 1e-6


class _Marker:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name

    def __reduce__(self):
        return (_marker, (self.name,))


_MARKERS: Dict[str, _Marker] = {}


def _marker(name: str) -> _Marker:
    if name not in _MARKERS:
        _MARKERS[name] = _Marker(name)
    return _MARKERS[name]


INFINITE = _marker("INFINITE")
CEMETERY = _marker("CEMETERY")


class RateContext:
    """Model bundle (H, P, psi_0) plus the node threshold.

    The spectral decomposition is computed once; everything else is
    evaluated on demand. Time arguments may be scalars or arrays; array
    inputs broadcast over leading axes.
    """

    def __init__(
        self,
        H: HermitianOperator,
        pov: Povm,
        psi0: StateVector,
        node_epsilon: float = DEFAULT_NODE_EPSILON,
        spec: SpectralDecomposition | None = None,
    ):
        if not 0.0 <= node_epsilon <= MAX_NODE_EPSILON:
            raise ValidationError(
                f"node_epsilon must lie in [0, {MAX_NODE_EPSILON:g}], got {node_epsilon}",
                "node_epsilon",
            )
        if not (H.dim == pov.dim == psi0.dim):
            raise ValidationError(
                f"dimension mismatch: H {H.dim}, POVM {pov.dim}, psi0 {psi0.dim}"
            )
        self.H = H
        self.pov = pov
        self.psi0 = psi0
        self.node_epsilon = float(node_epsilon)
        self.spec = spec if spec is not None else spectral_decompose(H)
        self.mass = float(np.vdot(psi0.amplitudes, psi0.amplitudes).real)
        self.threshold = self.node_epsilon * self.mass
        self._h = H.entries
        b = pov.basis_index
        self._hb_t = None if b is None else np.ascontiguousarray(H.entries[np.ix_(b, b)].T)

    @property
    def labels(self):
        return self.pov.labels

    def psi(self, t) -> np.ndarray:
        return propagate_many(self.psi0.amplitudes, self.spec, t)

    def weights(self, t) -> np.ndarray:
        """mu_t(x) for all labels, shape ``shape(t) + (L,)``."""
        return clamp_weights(self.pov.weights(self.psi(t)))

    def matrix_elements(self, t) -> np.ndarray:
        """``<psi_t|P(y) H P(x) psi_t>`` indexed ``[..., y, x]``."""
        psi = self.psi(t)
        b = self.pov.basis_index
        if b is not None:
            p = psi[..., b]
            return p.conj()[..., :, None] * self._hb_t.T * p[..., None, :]
        phi = self.pov.apply(psi)
        hphi = phi @ self._h.T
        return np.einsum("...yi,...xi->...yx", phi.conj(), hphi)

    def flow(self, t) -> np.ndarray:
        """Positive-part numerators ``[Im <psi|P(y)HP(x)psi>]^+`` as ``[..., y, x]``."""
        f = np.maximum(self.matrix_elements(t).imag, 0.0)
        idx = np.arange(len(self.pov))
        f[..., idx, idx] = 0.0
        return f

    def flow_from(self, t, k) -> np.ndarray:
        """Outgoing numerators ``[..., y]`` from label index ``k`` (broadcast with ``t``).

        Cheaper than :meth:`flow` when only one column per time is needed.
        """
        t = np.asarray(t, dtype=float)
        k = np.broadcast_to(np.asarray(k, dtype=np.int64), t.shape)
        psi = self.psi(t)
        b = self.pov.basis_index
        if b is not None:
            p = psi[..., b]
            src = np.take_along_axis(p, k[..., None], axis=-1)
            num = (p.conj() * self._hb_t[k] * src).imag
        else:
            phi = self.pov.apply(psi)
            src = np.take_along_axis(phi, k[..., None, None], axis=-2)[..., 0, :]
            hsrc = src @ self._h.T
            num = np.einsum("...yi,...i->...y", phi.conj(), hsrc).imag
        num = np.maximum(num, 0.0)
        np.put_along_axis(num, k[..., None], 0.0, axis=-1)
        return num

    def derivative(self, t) -> np.ndarray:
        """d/dt mu_t(x) = Im <psi_t|P(x) H psi_t> for all labels."""
        psi = self.psi(t)
        hpsi = psi @ self._h.T
        phi = self.pov.apply(psi)
        return np.einsum("...xi,...i->...x", phi.conj(), hpsi).imag


@dataclass(frozen=True)
class DistributionSnapshot:
    t: float
    weights: Dict[Hashable, float] = field(default_factory=dict)

    def total(self) -> float:
        return float(sum(self.weights.values()))

    def as_array(self, labels) -> np.ndarray:
        return np.array([self.weights.get(lab, 0.0) for lab in labels])


def jump_rate(ctx: RateContext, t: float, x, y):
    kx, ky = ctx.pov.index(x), ctx.pov.index(y)
    mu = ctx.weights(t)
    if mu[kx] <= ctx.threshold:
        return INFINITE
    if kx == ky:
        return 0.0
    return float(ctx.flow_from(t, kx)[ky] / mu[kx])


def total_rate(ctx: RateContext, t: float, x):
    k = ctx.pov.index(x)
    mu = ctx.weights(t)
    if mu[k] <= ctx.threshold:
        return INFINITE
    return float(ctx.flow_from(t, k).sum() / mu[k])


def distribution(ctx: RateContext, t: float) -> DistributionSnapshot:
    w = ctx.weights(float(t))
    return DistributionSnapshot(float(t), dict(zip(ctx.labels, w.tolist())))


def distribution_derivative(ctx: RateContext, t: float, x) -> float:
    return float(ctx.derivative(float(t))[ctx.pov.index(x)])


def admissible_set(ctx: RateContext, t: float) -> frozenset:
    w = ctx.weights(float(t))
    return frozenset(lab for lab, v in zip(ctx.labels, w) if v > ctx.threshold)


def destination_distribution(ctx: RateContext, t: float, x):
    """Jump-destination law ``sigma_t(.|x) / gamma_x(t)``.

    Returns CEMETERY when the total rate is zero or INFINITE. Labels at or
    below the node threshold are excluded from the support.
    """
    k = ctx.pov.index(x)
    mu = ctx.weights(float(t))
    if mu[k] <= ctx.threshold:
        return CEMETERY
    num = ctx.flow_from(float(t), k)
    num[mu <= ctx.threshold] = 0.0
    total = num.sum()
    if total <= 0.0:
        return CEMETERY
    p = num / total
    return {lab: float(v) for lab, v in zip(ctx.labels, p) if v > 0.0}


def rate_matrix(ctx: RateContext, t: float) -> np.ndarray:
    """All ``sigma_t(y|x)`` as ``[x, y]`` with ``np.inf`` rows for nodes (display only)."""
    mu = ctx.weights(float(t))
    flow = ctx.flow(float(t))
    out = np.empty((len(mu), len(mu)))
    for k in range(len(mu)):
        if mu[k] <= ctx.threshold:
            out[k, :] = np.inf
        else:
            out[k, :] = flow[:, k] / mu[k]
    return out
