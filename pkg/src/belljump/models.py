"""Bundled example systems.

``two_level`` is the analytic benchmark; ``bell_lattice`` is a finite
truncation of an occupation-number lattice (bosonic-style hopping, which
is enough because the jump process only sees H, P and psi_0);
``random_hermitian`` and ``compressed_povm_model`` are stress models.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .hilbert import (
    HermitianOperator,
    Povm,
    StateVector,
    ValidationError,
    basis_povm,
    povm_from_compression,
)
from .rates import RateContext

MAX_LATTICE_CONFIGS = 2000


@dataclass(frozen=True, eq=False)
class ModelSpec:
    name: str
    H: HermitianOperator
    pov: Povm
    psi0: StateVector
    closed_forms: Dict[str, Callable] = field(default_factory=dict)
    t_end: float = 1.0  # default horizon used by the CLI and the verification suite

    @property
    def dim(self) -> int:
        return self.H.dim

    def context(self, node_epsilon: float = 1e-12) -> RateContext:
        return RateContext(self.H, self.pov, self.psi0, node_epsilon)


def two_level() -> ModelSpec:
    """``H = sigma_x``, basis PVM, ``psi_0 = e_0``.

    ``psi_t = (cos(t/2), -i sin(t/2))`` so on ``(0, pi)`` the process jumps
    once from 0 to 1 at rate ``tan(t/2)`` and never returns.
    """
    return ModelSpec(
        name="two_level",
        H=HermitianOperator([[0, 1], [1, 0]]),
        pov=basis_povm(2),
        psi0=StateVector([1, 0]),
        closed_forms={
            "mu_0(t)": lambda t: np.cos(t / 2) ** 2,
            "mu_1(t)": lambda t: np.sin(t / 2) ** 2,
            "sigma_0_to_1(t)": lambda t: np.tan(t / 2),
            "Gamma_00(u)": lambda u: -2.0 * np.log(np.cos(u / 2)),
            "dmu_0(t)": lambda t: -np.sin(t) / 2,
        },
        t_end=math.pi,
    )


def lattice_configurations(sites: int, max_particles: int) -> list:
    """Occupation tuples with total at most ``max_particles``, lexicographic order."""
    return [
        c for c in itertools.product(range(max_particles + 1), repeat=sites)
        if sum(c) <= max_particles
    ]


def lattice_label(config: Sequence[int]) -> str:
    return "_".join(str(n) for n in config)


def bell_lattice(sites: int = 3, max_particles: int = 2, hop: float = 1.0, pair_amp: float = 0.5,
                 initial: Optional[Sequence[int]] = None) -> ModelSpec:
    """Open chain with hopping and single-particle creation/annihilation.

    Hopping ``a_{r+1}^+ a_r`` carries ``hop * sqrt(n_r (n_{r+1} + 1))``;
    creation ``a_r^+`` carries ``pair_amp * sqrt(n_r + 1)`` and is dropped when
    it would exceed ``max_particles``. Each term is inserted together with
    its adjoint, so truncation keeps H Hermitian. ``initial`` is an
    occupation tuple (default: vacuum).
    """
    if sites < 1 or max_particles < 0:
        raise ValidationError("need sites >= 1 and max_particles >= 0", "bell_lattice")
    if math.comb(sites + max_particles, max_particles) > MAX_LATTICE_CONFIGS:
        raise ValidationError(
            f"truncated space exceeds {MAX_LATTICE_CONFIGS} configurations", "bell_lattice"
        )
    configs = lattice_configurations(sites, max_particles)
    index = {c: i for i, c in enumerate(configs)}
    d = len(configs)
    H = np.zeros((d, d), dtype=complex)

    def couple(src, dst, amp):
        i, j = index[src], index[dst]
        H[j, i] += amp
        H[i, j] += np.conj(amp)

    for c in configs:
        for r in range(sites - 1):
            if c[r] > 0:
                dst = list(c)
                dst[r] -= 1
                dst[r + 1] += 1
                couple(c, tuple(dst), hop * math.sqrt(c[r] * (c[r + 1] + 1)))
        if sum(c) < max_particles:
            for r in range(sites):
                dst = list(c)
                dst[r] += 1
                couple(c, tuple(dst), pair_amp * math.sqrt(c[r] + 1))

    start = tuple(initial) if initial is not None else (0,) * sites
    if start not in index:
        raise ValidationError(f"initial configuration {start} is not in the truncated space", "initial")
    psi = np.zeros(d, dtype=complex)
    psi[index[start]] = 1.0
    labels = [lattice_label(c) for c in configs]
    return ModelSpec(
        name="bell_lattice",
        H=HermitianOperator(H),
        pov=basis_povm(d, labels),
        psi0=StateVector(psi),
        t_end=2.0,
    )


def _gaussian_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / (2.0 * math.sqrt(dim))


def _random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_hermitian(dim: int = 16, seed: int = 1) -> ModelSpec:
    """GUE-like Hermitian matrix scaled by ``1/sqrt(dim)``, basis PVM, random normalized state."""
    rng = np.random.default_rng(seed)
    H = _gaussian_hermitian(rng, dim)
    psi = _random_state(rng, dim)
    return ModelSpec(
        name="random_hermitian",
        H=HermitianOperator(H),
        pov=basis_povm(dim),
        psi0=StateVector(psi),
        t_end=2.0,
    )


def random_isometry(rng: np.random.Generator, dim_big: int, dim_small: int) -> np.ndarray:
    a = rng.standard_normal((dim_big, dim_small)) + 1j * rng.standard_normal((dim_big, dim_small))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def compressed_povm_model(dim_big: int = 6, dim_small: int = 4, seed: int = 2) -> ModelSpec:
    """Non-projective POVM ``V^* P0(x) V`` from the basis PVM on a bigger space."""
    if not 1 <= dim_small <= dim_big:
        raise ValidationError("need 1 <= dim_small <= dim_big", "compressed_povm_model")
    rng = np.random.default_rng(seed)
    V = random_isometry(rng, dim_big, dim_small)
    pov = povm_from_compression(basis_povm(dim_big), V)
    H = _gaussian_hermitian(rng, dim_small)
    psi = _random_state(rng, dim_small)
    return ModelSpec(
        name="compressed_povm",
        H=HermitianOperator(H),
        pov=pov,
        psi0=StateVector(psi),
        t_end=2.0,
    )


BUNDLED: Dict[str, Tuple[Callable[..., ModelSpec], dict]] = {
    "two_level": (two_level, {}),
    "bell_lattice": (bell_lattice, {"sites": 3, "max_particles": 2, "hop": 1.0, "pair_amp": 0.5}),
    "random_hermitian": (random_hermitian, {"dim": 16, "seed": 1}),
    "compressed_povm": (compressed_povm_model, {"dim_big": 6, "dim_small": 4, "seed": 2}),
}


def bundled_models() -> Dict[str, ModelSpec]:
    return {name: factory(**kw) for name, (factory, kw) in BUNDLED.items()}


def model_by_name(spec: str) -> ModelSpec:
    """Resolve ``name`` or ``name:key=value,key=value`` to a bundled model."""
    name, _, args = spec.partition(":")
    if name not in BUNDLED:
        raise ValidationError(f"unknown model {name!r}; bundled: {', '.join(BUNDLED)}", "model")
    factory, defaults = BUNDLED[name]
    kwargs = dict(defaults)
    for item in filter(None, args.split(",")):
        key, eq, value = item.partition("=")
        if not eq or key not in defaults:
            raise ValidationError(f"bad model parameter {item!r} for {name}", f"model.{key}")
        kwargs[key] = type(defaults[key])(value)
    return factory(**kwargs)
