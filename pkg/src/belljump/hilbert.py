"""Finite-dimensional quantum kernel.

Exact unitary propagation from a one-time spectral decomposition, plus the
POVM algebra needed by the jump rates. Time units follow hbar = 2, so the
propagator is ``exp(-i H t / 2)``.

All objects are immutable: arrays are copied on construction and marked
read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

HERMITIAN_RTOL = 1e-12
POVM_COMPLETENESS_TOL = 1e-10
POVM_PSD_TOL = 1e-10
ISOMETRY_TOL = 1e-10
WEIGHT_IMAG_TOL = 1e-12
WEIGHT_NEG_TOL = 1e-12


class ValidationError(ValueError):
    """Invalid model data.

    ``path`` locates the offending entry, e.g. ``$.povm[2].matrix[5]`` for
    JSON input or ``H[1][0]`` for in-memory arrays.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def _frozen(a, dtype=complex) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = _frozen(self.amplitudes)
        if amp.ndim != 1 or amp.size == 0:
            raise ValidationError("state vector must be a non-empty 1-d array", "psi")
        if not np.all(np.isfinite(amp)):
            bad = int(np.flatnonzero(~np.isfinite(amp))[0])
            raise ValidationError("non-finite amplitude", f"psi[{bad}]")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        return StateVector(self.amplitudes / self.norm())


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    entries: np.ndarray

    def __post_init__(self):
        m = _frozen(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValidationError(f"expected a square matrix, got shape {m.shape}", "H")
        if not np.all(np.isfinite(m)):
            i, j = np.argwhere(~np.isfinite(m))[0]
            raise ValidationError("non-finite entry", f"H[{i}][{j}]")
        defect = np.abs(m - m.conj().T)
        scale = float(np.max(np.abs(m))) if m.size else 0.0
        worst = float(defect.max())
        if worst > HERMITIAN_RTOL * scale:
            i, j = np.unravel_index(int(np.argmax(defect)), defect.shape)
            raise ValidationError(
                f"not Hermitian: |H[i][j] - conj(H[j][i])| = {worst:.3e} "
                f"exceeds {HERMITIAN_RTOL:g} * max|H|",
                f"H[{i}][{j}]",
            )
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues, float))
        object.__setattr__(self, "eigenvectors", _frozen(self.eigenvectors))

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T


class Povm:
    """Finite POVM: one positive semidefinite matrix per configuration label.

    Elements are stored dense as an ``(L, d, d)`` array in label order. When
    every element is a rank-one projector onto a standard basis vector (the
    usual occupation-number PVM), ``basis_index[k]`` holds that basis index
    and the rate code takes an O(d) shortcut.
    """

    def __init__(self, labels: Sequence[Hashable], elements, *, validate: bool = True):
        labels = tuple(labels)
        els = _frozen(elements)
        if els.ndim != 3 or els.shape[1] != els.shape[2]:
            raise ValidationError(f"elements must have shape (L, d, d), got {els.shape}", "povm")
        if len(labels) != els.shape[0]:
            raise ValidationError(
                f"{len(labels)} labels for {els.shape[0]} elements", "povm"
            )
        index = {}
        for k, lab in enumerate(labels):
            if lab in index:
                raise ValidationError(f"duplicate label {lab!r}", f"povm[{k}].label")
            index[lab] = k
        self.labels = labels
        self.elements = els
        self._index = index
        if validate:
            self._validate()
        self.basis_index = self._detect_basis()
        diag = np.einsum("kii->ki", els)
        self.is_diagonal = bool(
            np.all(np.abs(els - np.einsum("ki,ij->kij", diag, np.eye(self.dim))) == 0)
        )
        self._diagonals = _frozen(diag)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown configuration label {label!r}") from None

    def _validate(self):
        d = self.dim
        for k, P in enumerate(self.elements):
            scale = max(1.0, float(np.max(np.abs(P))))
            defect = np.abs(P - P.conj().T)
            if defect.max() > HERMITIAN_RTOL * scale:
                i, j = np.unravel_index(int(np.argmax(defect)), defect.shape)
                raise ValidationError(
                    f"element for label {self.labels[k]!r} is not Hermitian",
                    f"povm[{k}].matrix[{i}][{j}]",
                )
            lo = float(np.linalg.eigvalsh(P)[0])
            if lo < -POVM_PSD_TOL:
                raise ValidationError(
                    f"element for label {self.labels[k]!r} has eigenvalue {lo:.3e} < 0",
                    f"povm[{k}].matrix",
                )
        total = self.elements.sum(axis=0) - np.eye(d)
        worst = float(np.max(np.abs(total)))
        if worst > POVM_COMPLETENESS_TOL:
            i, j = np.unravel_index(int(np.argmax(np.abs(total))), total.shape)
            raise ValidationError(
                f"elements do not sum to the identity (max defect {worst:.3e})",
                f"povm.sum[{i}][{j}]",
            )

    def _detect_basis(self):
        if len(self.labels) != self.dim:
            return None
        idx = np.empty(len(self.labels), dtype=np.int64)
        for k, P in enumerate(self.elements):
            nz = np.argwhere(P != 0)
            if len(nz) != 1 or nz[0][0] != nz[0][1] or P[nz[0][0], nz[0][0]] != 1:
                return None
            idx[k] = nz[0][0]
        if len(set(idx.tolist())) != self.dim:
            return None
        idx.setflags(write=False)
        return idx

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Return ``P(x) psi`` for every label, shape ``(..., L, d)``."""
        psi = np.asarray(psi)
        if self.basis_index is not None:
            out = np.zeros(psi.shape[:-1] + (len(self.labels), self.dim), dtype=complex)
            k = np.arange(len(self.labels))
            out[..., k, self.basis_index] = psi[..., self.basis_index]
            return out
        if self.is_diagonal:
            return self._diagonals * psi[..., None, :]
        return np.einsum("kij,...j->...ki", self.elements, psi)

    def weights(self, psi: np.ndarray) -> np.ndarray:
        """Raw ``<psi|P(x) psi>`` for every label (complex, unclamped)."""
        psi = np.asarray(psi)
        if self.basis_index is not None:
            return (np.abs(psi[..., self.basis_index]) ** 2).astype(complex)
        if self.is_diagonal:
            return (self._diagonals * (np.abs(psi) ** 2)[..., None, :]).sum(axis=-1).astype(complex)
        return np.einsum("...i,...ki->...k", psi.conj(), self.apply(psi))


def basis_povm(dim: int, labels: Sequence[Hashable] | None = None) -> Povm:
    """Projectors onto the standard basis vectors."""
    if labels is None:
        labels = [str(k) for k in range(dim)]
    els = np.zeros((dim, dim, dim), dtype=complex)
    els[np.arange(dim), np.arange(dim), np.arange(dim)] = 1.0
    return Povm(labels, els)


def spectral_decompose(H: HermitianOperator) -> SpectralDecomposition:
    """Diagonalize ``H``; eigenvalues come back in ascending order."""
    if not isinstance(H, HermitianOperator):
        H = HermitianOperator(H)
    m = H.entries
    lam, U = np.linalg.eigh((m + m.conj().T) / 2)
    return SpectralDecomposition(lam, U)


def propagate(psi0: StateVector, spec: SpectralDecomposition, t) -> StateVector:
    """Return ``exp(-i H t / 2) psi0`` computed in the eigenbasis."""
    if psi0.dim != spec.dim:
        raise ValidationError(f"state has dim {psi0.dim}, operator has dim {spec.dim}", "psi")
    return StateVector(propagate_many(psi0.amplitudes, spec, np.asarray(float(t))))


def propagate_many(psi0: np.ndarray, spec: SpectralDecomposition, ts) -> np.ndarray:
    """Vectorized propagation: ``ts`` of shape ``S`` gives states of shape ``S + (d,)``."""
    U = spec.eigenvectors
    coeff = U.conj().T @ psi0
    ts = np.asarray(ts, dtype=float)
    phases = np.exp(-0.5j * ts[..., None] * spec.eigenvalues)
    out = np.einsum("ij,...j->...i", U, phases * coeff)
    # all phases are 1 at t = 0; skip the round trip through the eigenbasis
    out[ts == 0] = psi0
    return out


def quantum_weight(psi: StateVector, pov: Povm, x) -> float:
    """``<psi|P(x) psi>`` as a nonnegative real."""
    k = pov.index(x)
    Px = pov.elements[k]
    w = complex(np.vdot(psi.amplitudes, Px @ psi.amplitudes))
    return _clean_weight(w, label=x)


def _clean_weight(w: complex, label=None) -> float:
    if abs(w.imag) > WEIGHT_IMAG_TOL * max(1.0, abs(w.real)):
        raise ValidationError(f"weight for {label!r} has imaginary part {w.imag:.3e}")
    r = w.real
    if r < 0:
        if r < -WEIGHT_NEG_TOL:
            raise ValidationError(f"negative quantum weight {r:.3e} for {label!r}; broken POVM")
        return 0.0
    return r


def clamp_weights(raw: np.ndarray) -> np.ndarray:
    """Vectorized form of the weight cleanup: real part, tiny negatives to 0."""
    w = np.real(raw)
    if np.any(w < -WEIGHT_NEG_TOL):
        raise ValidationError(f"negative quantum weight {w.min():.3e}; broken POVM")
    return np.maximum(w, 0.0)


def matrix_element(psi: StateVector, pov: Povm, y, H: HermitianOperator, x) -> complex:
    """``<psi|P(y) H P(x) psi>`` evaluated as ``(P(y)psi)^* H (P(x)psi)``."""
    Py = pov.elements[pov.index(y)]
    Px = pov.elements[pov.index(x)]
    a = Py @ psi.amplitudes
    b = Px @ psi.amplitudes
    return complex(np.vdot(a, H.entries @ b))


def povm_from_compression(pvm: Povm, isometry) -> Povm:
    """Compress a POVM on a big space to the range of an isometry ``V``.

    Elements become ``V^* P0(x) V``; completeness survives because
    ``V^* V = I``, projectivity in general does not.
    """
    V = np.asarray(isometry, dtype=complex)
    if V.ndim != 2 or V.shape[0] != pvm.dim:
        raise ValidationError(
            f"isometry must have shape ({pvm.dim}, k), got {V.shape}", "isometry"
        )
    gram = V.conj().T @ V
    defect = np.abs(gram - np.eye(V.shape[1]))
    if defect.max() > ISOMETRY_TOL:
        i, j = np.unravel_index(int(np.argmax(defect)), defect.shape)
        raise ValidationError(
            f"columns are not orthonormal (|V*V - I| = {defect.max():.3e})",
            f"isometry.gram[{i}][{j}]",
        )
    els = np.einsum("ai,kab,bj->kij", V.conj(), pvm.elements, V)
    els = (els + np.conj(np.swapaxes(els, 1, 2))) / 2
    return Povm(pvm.labels, els)
