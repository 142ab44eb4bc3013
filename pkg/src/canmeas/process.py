"""The pointer-coupling measuring process on a periodic lattice.

The system observable X has eigenvalues ``x_i = m_i dq`` with integer ``m_i``,
so the coupling ``U = exp(-i X (x) P)`` (with t * lambda = 1) is the conditional
shift ``sum_i P_i (x) Shift(m_i)``: every eigencomponent of the system drags the
pointer packet by an exact number of lattice sites.

Composite vectors are indexed ``(system, site)`` with the site index fast.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from canmeas.errors import (
    BinMisaligned,
    DimensionMismatch,
    NotCommensurate,
    SupportViolation,
    TooLarge,
    ZeroProbability,
)
from canmeas.kernels import MeanKernel, conditional_expectation
from canmeas.lattice import ApparatusPreparation, Lattice, shift_matrix
from canmeas.linalg import (
    HermitianObservable,
    DensityState,
    as_matrix,
    dagger,
    function_of_observable,
    operator_norm,
    partial_trace_apparatus,
    spectral_decompose,
)

MAX_COMPOSITE_DIM = 4096
WRAP_MASS_TOL = 1e-10


def _rho_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityState) else as_matrix(rho)


def _observable(y) -> HermitianObservable:
    return y if isinstance(y, HermitianObservable) else spectral_decompose(y)


def wrapped_mass(unit_vector: np.ndarray, m: int) -> float:
    """Probability mass that crosses the periodic boundary under a shift by ``m`` sites."""
    w = np.abs(unit_vector) ** 2
    if m > 0:
        return float(w[len(w) - m:].sum())
    if m < 0:
        return float(w[:-m].sum())
    return 0.0


@dataclass(frozen=True, eq=False)
class MeasurementProcess:
    """Coupling of a system observable to a lattice pointer for unit time.

    Raises
    ------
    NotCommensurate
        If some eigenvalue is not an integer multiple of ``dq``.
    SupportViolation
        If ``max|m_i| dq + 3 s >= L/2`` or some shift moves more than
        ``1e-10`` of the packet's probability across the periodic boundary.
    """

    observable: HermitianObservable
    lattice: Lattice
    preparation: ApparatusPreparation
    shifts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lat = self.lattice
        if self.preparation.lattice != lat:
            raise DimensionMismatch("preparation lives on a different lattice")
        ratio = self.observable.eigenvalues / lat.dq
        shifts = np.rint(ratio).astype(int)
        if np.any(np.abs(ratio - shifts) > 1e-9 * np.maximum(1, np.abs(ratio))):
            raise NotCommensurate(f"eigenvalues {self.observable.eigenvalues} are not multiples of dq={lat.dq}")
        object.__setattr__(self, "shifts", shifts)
        reach = np.max(np.abs(shifts)) * lat.dq + 3 * self.preparation.position_width
        if not reach < lat.length / 2:
            raise SupportViolation(f"max|x| + 3s = {reach:g} must be < L/2 = {lat.length / 2:g}")
        phi = self.preparation.wavefunction.unit_vector
        for m in shifts:
            leak = wrapped_mass(phi, int(m))
            if leak >= WRAP_MASS_TOL:
                raise SupportViolation(f"shift by {m} sites wraps mass {leak:.2e} >= {WRAP_MASS_TOL:g}")

    @classmethod
    def from_multipliers(
        cls,
        multipliers: Sequence[int],
        lattice: Lattice,
        preparation: ApparatusPreparation,
        basis: np.ndarray | None = None,
    ) -> "MeasurementProcess":
        """Build X = basis diag(m_i dq) basis^dagger (computational basis by default)."""
        values = np.asarray(multipliers, dtype=float) * lattice.dq
        basis = np.eye(len(values), dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
        x = spectral_decompose((basis * values[None, :]) @ dagger(basis))
        return cls(x, lattice, preparation)

    @property
    def sys_dim(self) -> int:
        return self.observable.dim

    @property
    def app_dim(self) -> int:
        return self.lattice.n_points

    @property
    def apparatus_vector(self) -> np.ndarray:
        return self.preparation.wavefunction.unit_vector

    @cached_property
    def pointer_vectors(self) -> np.ndarray:
        """Row ``i`` is the packet displaced by ``m_i`` sites."""
        phi = self.apparatus_vector
        return np.array([np.roll(phi, m) for m in self.shifts])

    @cached_property
    def isometry(self) -> np.ndarray:
        """``V psi = U (psi (x) alpha)`` as a ``(d N) x d`` matrix."""
        x = self.observable
        d, n = self.sys_dim, self.app_dim
        v = np.zeros((d, n, d), dtype=complex)
        for i, vec in enumerate(self.pointer_vectors):
            v += np.einsum("ab,j->ajb", x.projector(i), vec)
        return v.reshape(d * n, d)


def coupling_unitary(proc: MeasurementProcess) -> np.ndarray:
    """Explicit ``sum_i P_i (x) Shift(m_i)``."""
    n = proc.app_dim
    if proc.sys_dim * n > MAX_COMPOSITE_DIM:
        raise TooLarge(f"composite dimension {proc.sys_dim * n} > {MAX_COMPOSITE_DIM}")
    x = proc.observable
    return sum(np.kron(x.projector(i), shift_matrix(n, int(m))) for i, m in enumerate(proc.shifts))


def evolve_pure(proc: MeasurementProcess, psi) -> np.ndarray:
    """``U (psi (x) alpha)``: each eigencomponent carries its own displaced packet."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (proc.sys_dim,):
        raise DimensionMismatch(f"system vector has shape {psi.shape}")
    if abs(np.linalg.norm(psi) - 1) > 1e-12:
        raise ValueError("system vector is not normalised")
    x = proc.observable
    out = np.zeros((proc.sys_dim, proc.app_dim), dtype=complex)
    for i, vec in enumerate(proc.pointer_vectors):
        out += np.outer(x.projector(i) @ psi, vec)
    return out.reshape(-1)


def evolved_state(proc: MeasurementProcess, rho) -> np.ndarray:
    """Composite density matrix ``U (rho (x) sigma) U^dagger``."""
    v = proc.isometry
    return v @ _rho_matrix(rho) @ dagger(v)


def heisenberg(proc: MeasurementProcess, t) -> np.ndarray:
    """``U^dagger T U`` for a composite operator ``T``."""
    u = coupling_unitary(proc)
    return dagger(u) @ as_matrix(t) @ u


def heisenberg_pointer_check(proc: MeasurementProcess, f: Callable) -> float:
    """Operator-norm residual of ``U^dagger (1 (x) f(Q)) U = f_cyc(X (x) 1 + 1 (x) Q)``.

    The right side is built independently, by functional calculus on the
    spectral resolution of ``X (x) 1 + 1 (x) Q``, with ``f`` evaluated after
    reducing its argument modulo L into ``[-L/2, L/2)``.
    """
    lat = proc.lattice
    d, n = proc.sys_dim, proc.app_dim
    fq = np.diag(np.asarray(f(lat.positions), dtype=complex))
    lhs = heisenberg(proc, np.kron(np.eye(d), fq))
    total = np.kron(proc.observable.matrix, np.eye(n)) + np.kron(np.eye(d), np.diag(lat.positions))
    rhs = function_of_observable(lambda v: f(lat.wrap(v)), spectral_decompose(total))
    return operator_norm(lhs - rhs)


def apparatus_contraction(proc: MeasurementProcess, t) -> np.ndarray:
    """System operator ``M`` with ``<psi|M|psi'> = <psi (x) alpha| T |psi' (x) alpha>``."""
    t = as_matrix(t)
    d, n = proc.sys_dim, proc.app_dim
    if t.shape != (d * n, d * n):
        raise DimensionMismatch(f"composite operator has shape {t.shape}, expected {(d * n, d * n)}")
    w = np.kron(np.eye(d), proc.apparatus_vector[:, None])
    return dagger(w) @ t @ w


def momentum_twirl(proc: MeasurementProcess, y) -> np.ndarray:
    """``sum_k w(p_k) exp(i p_k X) Y exp(-i p_k X)`` with the preparation's momentum weights."""
    y = as_matrix(y)
    x = proc.observable
    v = x.eigenvectors
    p = proc.lattice.momenta
    w = proc.preparation.momentum_weights
    phases = np.exp(1j * np.outer(p, x.column_eigenvalues))
    rotations = np.einsum("ij,kj,lj->kil", v, phases, v.conj())
    return np.einsum("k,kij,jl,kml->im", w, rotations, y, rotations.conj())


@dataclass(frozen=True)
class PointerBins:
    """Half-open intervals ``[edges[b], edges[b+1])`` partitioning the lattice range."""

    edges: tuple[float, ...]

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        if len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing with at least two entries")
        object.__setattr__(self, "edges", edges)

    @property
    def count(self) -> int:
        return len(self.edges) - 1

    def locate(self, values) -> np.ndarray:
        """Bin index of each value, -1 if outside every bin."""
        idx = np.searchsorted(self.edges, np.asarray(values, dtype=float), side="right") - 1
        return np.where((idx >= 0) & (idx < self.count), idx, -1)

    def site_bins(self, lat: Lattice) -> np.ndarray:
        idx = self.locate(lat.positions)
        if np.any(idx < 0):
            raise ValueError("pointer bins do not cover every lattice site")
        return idx

    def check_alignment(self, values, tol: float = 1e-9):
        """Raise BinMisaligned unless every value lies strictly inside some bin."""
        values = np.asarray(values, dtype=float)
        edges = np.asarray(self.edges)
        close = np.abs(values[:, None] - edges[None, :]) <= tol
        if np.any(close):
            bad = values[np.any(close, axis=1)]
            raise BinMisaligned(f"eigenvalues {bad.tolist()} sit on a bin edge")
        if np.any(self.locate(values) < 0):
            raise BinMisaligned("some eigenvalue lies outside every bin")

    def indicator(self, lat: Lattice, event: Sequence[int]) -> np.ndarray:
        """Per-site 0/1 mask of the union of bins in ``event``."""
        return np.isin(self.site_bins(lat), np.asarray(event, dtype=int)).astype(float)


def make_bins(lat: Lattice, count: int | None = None, edges: Sequence[float] | None = None) -> PointerBins:
    """Equal bins made of whole lattice cells, or explicit edges covering every site."""
    if (count is None) == (edges is None):
        raise ValueError("give exactly one of count or edges")
    if count is not None:
        if not 1 <= count <= lat.n_points:
            raise ValueError(f"bin count must be in [1, {lat.n_points}]")
        cuts = np.rint(np.arange(count + 1) * lat.n_points / count)
        edges = -lat.length / 2 - lat.dq / 2 + cuts * lat.dq
    bins = PointerBins(tuple(edges))
    bins.site_bins(lat)
    return bins


def conditional_system_operators(proc: MeasurementProcess, rho) -> np.ndarray:
    """``R_j = Tr_app[(1 (x) |j><j|) U(rho (x) sigma)U^dagger]`` for every site ``j``.

    Shape ``(N, d, d)``; ``Tr R_j`` is the pointer probability at site ``j``.
    """
    d, n = proc.sys_dim, proc.app_dim
    v = proc.isometry.reshape(d, n, d)
    return np.einsum("ajb,bc,ejc->jae", v, _rho_matrix(rho), v.conj())


def pointer_distribution(proc: MeasurementProcess, rho, bins: PointerBins | None = None) -> np.ndarray:
    """Pointer probabilities per site, or per bin when ``bins`` is given."""
    per_site = np.einsum("jaa->j", conditional_system_operators(proc, rho)).real
    if bins is None:
        return per_site
    return np.bincount(bins.site_bins(proc.lattice), weights=per_site, minlength=bins.count)


def pointer_moment_errors(proc: MeasurementProcess, rho) -> tuple[float, float]:
    """Deviation of the pointer mean and variance from the convolution identities.

    Predicted mean is ``<X>_rho + <Q>_alpha`` and predicted variance is
    ``Var_rho(X) + Var_alpha(Q)``.
    """
    q = proc.lattice.positions
    probs = pointer_distribution(proc, rho)
    mean = np.sum(q * probs)
    var = np.sum(q**2 * probs) - mean**2
    x = proc.observable
    r = _rho_matrix(rho)
    px = np.array([np.trace(x.projector(i) @ r).real for i in range(len(x.eigenvalues))])
    x_mean = np.sum(px * x.eigenvalues)
    x_var = np.sum(px * x.eigenvalues**2) - x_mean**2
    wf = proc.preparation.wavefunction
    return abs(mean - (x_mean + wf.position_mean())), abs(var - (x_var + wf.position_std() ** 2))


@dataclass(frozen=True, eq=False)
class SuccessiveJointDistribution:
    """``table[b, j] = Pr{pointer in bin b, Y = y_values[j]}``."""

    pointer_bins: PointerBins
    y_values: np.ndarray
    table: np.ndarray

    def __post_init__(self):
        if abs(self.table.sum() - 1) > 1e-10:
            raise ValueError(f"joint table sums to {self.table.sum():.12g}")
        if np.any(self.table < -1e-12):
            raise ValueError("joint table has negative entries")

    def bin_marginal(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def y_marginal(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def y_moment(self, event: Sequence[int]) -> float:
        """``sum_{b in event} sum_j y_j p(b, y_j)``."""
        return float(self.table[list(event)].sum(axis=0) @ self.y_values)


def successive_joint(proc: MeasurementProcess, rho, y, bins: PointerBins) -> SuccessiveJointDistribution:
    """Joint law of the pointer reading and a subsequent measurement of Y."""
    y = _observable(y)
    if y.dim != proc.sys_dim:
        raise DimensionMismatch("Y does not act on the system space")
    per_site = conditional_system_operators(proc, rho)
    idx = bins.site_bins(proc.lattice)
    per_bin = np.zeros((bins.count, proc.sys_dim, proc.sys_dim), dtype=complex)
    np.add.at(per_bin, idx, per_site)
    table = np.einsum("yab,kba->ky", np.array(y.projectors), per_bin).real
    return SuccessiveJointDistribution(bins, y.eigenvalues.copy(), table)


def event_projection(proc: MeasurementProcess, bins: PointerBins, event: Sequence[int]) -> np.ndarray:
    """Spectral projection X(B) for B the union of the bins in ``event``."""
    x = proc.observable
    return x.spectral_projection(np.isin(bins.locate(x.eigenvalues), list(event)))


def srinivas_sides(
    proc: MeasurementProcess,
    rho,
    y,
    bins: PointerBins,
    event: Sequence[int],
    kernel: MeanKernel | None = None,
) -> tuple[float, float]:
    """Both sides of the collapse identity for the pointer event ``B``.

    Left: Y-mean of the successive joint distribution restricted to ``B``.
    Right: ``Tr[X(B) E^X[Y] rho]`` with the given kernel (pinching by default).
    """
    bins.check_alignment(proc.observable.eigenvalues)
    y = _observable(y)
    lhs = successive_joint(proc, rho, y, bins).y_moment(event)
    kernel = kernel or MeanKernel.pinching()
    ey = conditional_expectation(proc.observable, y.matrix, kernel)
    rhs = np.trace(event_projection(proc, bins, event) @ ey @ _rho_matrix(rho)).real
    return lhs, float(rhs)


def srinivas_gap(proc, rho, y, bins: PointerBins, event: Sequence[int], kernel: MeanKernel | None = None) -> float:
    lhs, rhs = srinivas_sides(proc, rho, y, bins, event, kernel)
    return abs(lhs - rhs)


def posterior_state(proc: MeasurementProcess, rho, bins: PointerBins, bin_index: int) -> DensityState:
    """System state conditioned on the pointer landing in one bin."""
    mask = bins.indicator(proc.lattice, [bin_index])
    d, n = proc.sys_dim, proc.app_dim
    proj = np.kron(np.eye(d), np.diag(mask))
    omega = evolved_state(proc, rho)
    r = partial_trace_apparatus(proj @ omega @ proj, d, n)
    prob = np.trace(r).real
    if prob <= 1e-12:
        raise ZeroProbability(f"bin {bin_index} has probability {prob:.3e}")
    r = r / prob
    return DensityState((r + dagger(r)) / 2, tol=1e-10)


def pointer_readout_residual(proc: MeasurementProcess, f: Callable) -> float:
    """``|| E_alpha[U^dagger (1 (x) f(Q)) U] - f(X) ||``; vanishes as the packet narrows."""
    d = proc.sys_dim
    fq = np.diag(np.asarray(f(proc.lattice.positions), dtype=complex))
    got = apparatus_contraction(proc, heisenberg(proc, np.kron(np.eye(d), fq)))
    return operator_norm(got - function_of_observable(f, proc.observable))


def joint_readout_residual(proc: MeasurementProcess, y, f: Callable, kernel: MeanKernel | None = None) -> float:
    """``|| E_alpha[U^dagger (Y (x) f(Q)) U] - f(X) E^X[Y] ||``."""
    y = as_matrix(y)
    fq = np.diag(np.asarray(f(proc.lattice.positions), dtype=complex))
    got = apparatus_contraction(proc, heisenberg(proc, np.kron(y, fq)))
    ey = conditional_expectation(proc.observable, y, kernel or MeanKernel.pinching())
    return operator_norm(got - function_of_observable(f, proc.observable) @ ey)
