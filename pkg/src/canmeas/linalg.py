"""Dense complex matrix algebra: spectral resolutions, tensor products, partial traces.

Composite spaces always put the system index first (slow) and the apparatus
index second (fast), so ``kron(A, B)`` acts as ``A`` on the system and ``B`` on
the apparatus.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from canmeas.errors import DimensionMismatch, NotHermitian

DEFAULT_GAP_TOL = 1e-9
HERMITIAN_TOL = 1e-10


def as_matrix(m) -> np.ndarray:
    """Coerce to a square complex ndarray with finite entries."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive."""
    v = np.array(vectors, dtype=complex)
    idx = np.argmax(np.abs(v), axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(pivots) / pivots)[None, :]


@dataclass(frozen=True, eq=False)
class HermitianObservable:
    """A Hermitian matrix together with its spectral resolution.

    Parameters
    ----------
    matrix : ndarray
        The operator itself.
    eigenvalues : ndarray
        Distinct eigenvalues in strictly increasing order.
    eigenvectors : ndarray
        Unitary whose columns are eigenvectors, grouped so that columns
        ``groups == i`` span the eigenspace of ``eigenvalues[i]``.
    groups : ndarray
        Group label (index into ``eigenvalues``) of every column.

    Projectors are built on demand because large diagonal observables (the
    pointer position on a 256-site lattice, say) would otherwise store
    hundreds of dense rank-one matrices.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    groups: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def ranks(self) -> list[int]:
        return np.bincount(self.groups, minlength=len(self.eigenvalues)).tolist()

    @property
    def column_eigenvalues(self) -> np.ndarray:
        """Eigenvalue attached to each eigenvector column."""
        return self.eigenvalues[self.groups]

    def projector(self, i: int) -> np.ndarray:
        v = self.eigenvectors[:, self.groups == i]
        return v @ dagger(v)

    @cached_property
    def projectors(self) -> tuple[np.ndarray, ...]:
        return tuple(self.projector(i) for i in range(len(self.eigenvalues)))

    def spectral_projection(self, mask: Sequence[bool]) -> np.ndarray:
        """Projection onto the eigenvalues selected by ``mask`` (the X(B) of a Borel set)."""
        mask = np.asarray(mask, dtype=bool)
        v = self.eigenvectors[:, mask[self.groups]]
        return v @ dagger(v)


def _group_eigenvalues(evals: np.ndarray, gap_tol: float) -> tuple[np.ndarray, np.ndarray]:
    groups = np.zeros(len(evals), dtype=int)
    if len(evals) > 1:
        groups[1:] = np.cumsum(np.diff(evals) > gap_tol)
    values = np.array([evals[groups == g].mean() for g in range(groups[-1] + 1)])
    return values, groups


def from_eigensystem(matrix, evals, evecs, gap_tol: float = DEFAULT_GAP_TOL) -> HermitianObservable:
    """Assemble an observable from a known eigensystem (evals need not be sorted)."""
    evals = np.asarray(evals, dtype=float)
    order = np.argsort(evals, kind="stable")
    evals = evals[order]
    evecs = fix_phases(np.asarray(evecs, dtype=complex)[:, order])
    values, groups = _group_eigenvalues(evals, gap_tol)
    return HermitianObservable(as_matrix(matrix), values, evecs, groups)


def spectral_decompose(m, gap_tol: float = DEFAULT_GAP_TOL) -> HermitianObservable:
    """Spectral resolution of a Hermitian matrix.

    Eigenvalues closer than ``gap_tol`` (absolute) are merged into one
    degenerate group, represented by their mean.

    Raises
    ------
    NotHermitian
        If ``max|m - m^dagger|`` exceeds 1e-10.
    """
    a = as_matrix(m)
    asym = np.max(np.abs(a - dagger(a))) if a.size else 0.0
    if asym > HERMITIAN_TOL:
        raise NotHermitian(f"asymmetry {asym:.3e} exceeds {HERMITIAN_TOL}")
    evals, evecs = np.linalg.eigh((a + dagger(a)) / 2)
    return from_eigensystem(a, evals, evecs, gap_tol)


def function_of_observable(f: Callable, x: HermitianObservable) -> np.ndarray:
    """Functional calculus ``f(X) = sum_i f(x_i) P_i``."""
    values = np.array([f(v) for v in x.eigenvalues], dtype=complex)
    v = x.eigenvectors
    return (v * values[x.groups][None, :]) @ dagger(v)


def tensor_product(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace_apparatus(t, sys_dim: int, app_dim: int) -> np.ndarray:
    """Trace out the apparatus (fast) index of a composite operator."""
    t = np.asarray(t, dtype=complex)
    if t.shape != (sys_dim * app_dim, sys_dim * app_dim):
        raise DimensionMismatch(f"shape {t.shape} is not ({sys_dim}*{app_dim})^2")
    return np.einsum("iaja->ij", t.reshape(sys_dim, app_dim, sys_dim, app_dim))


def partial_trace_system(t, sys_dim: int, app_dim: int) -> np.ndarray:
    t = np.asarray(t, dtype=complex)
    if t.shape != (sys_dim * app_dim, sys_dim * app_dim):
        raise DimensionMismatch(f"shape {t.shape} is not ({sys_dim}*{app_dim})^2")
    return np.einsum("aiaj->ij", t.reshape(sys_dim, app_dim, sys_dim, app_dim))


@dataclass(frozen=True, eq=False)
class DensityState:
    """A normal state: Hermitian, positive semidefinite, unit trace."""

    matrix: np.ndarray
    tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        m = as_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        if np.max(np.abs(m - dagger(m))) > self.tol:
            raise NotHermitian("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > self.tol:
            raise ValueError(f"density matrix has trace {np.trace(m).real:.15g}")
        if np.linalg.eigvalsh((m + dagger(m)) / 2)[0] < -self.tol:
            raise ValueError("density matrix is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, psi) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_diagonal(cls, weights) -> "DensityState":
        w = np.asarray(weights, dtype=float)
        return cls(np.diag(w / w.sum()))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator, rank: int | None = None) -> "DensityState":
        return cls(random_density_matrix(dim, rng, rank))


def expectation(a, rho) -> complex:
    """Trace pairing ``Tr[a rho]``."""
    a = as_matrix(a)
    r = rho.matrix if isinstance(rho, DensityState) else as_matrix(rho)
    if a.shape != r.shape:
        raise DimensionMismatch(f"{a.shape} vs {r.shape}")
    return complex(np.einsum("ij,ji->", a, r))


def operator_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=complex), 2))


def random_hermitian(dim: int, rng: np.random.Generator, norm: float | None = None) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (g + dagger(g)) / 2
    if norm is not None:
        h *= norm / operator_norm(h)
    return h


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = g @ dagger(g)
    rho = (rho + dagger(rho)) / 2
    return rho / np.trace(rho).real


def random_state_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)
