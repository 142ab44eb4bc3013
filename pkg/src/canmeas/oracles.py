"""Brute-force references for the core operations.

Each oracle reaches its answer by a route that shares nothing with the code
it checks beyond :mod:`canmeas.linalg`: projective collapse instead of the
pointer model, an explicit u-grid average instead of the gap kernel, and a
dense spectral exponential instead of the conditional shift.
"""
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from canmeas.errors import GridTooCoarse, TooLarge
from canmeas.linalg import (
    HermitianObservable,
    DensityState,
    as_matrix,
    dagger,
    random_density_matrix,
    random_hermitian,
    random_unitary,
    spectral_decompose,
)

MAX_ORACLE_DIM = 512


@dataclass
class OracleReport:
    name: str
    max_abs_error: float
    instances_tested: int
    worst_instance: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    tolerance: float | None = None

    def __post_init__(self):
        if self.max_abs_error < 0 or self.instances_tested < 1:
            raise ValueError("malformed oracle report")

    @property
    def passed(self) -> bool:
        return self.tolerance is None or self.max_abs_error <= self.tolerance

    def to_dict(self) -> dict:
        out = asdict(self)
        out["max_abs_error"] = float(self.max_abs_error)
        out["passed"] = bool(self.passed)
        return out


def _rho(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityState) else as_matrix(rho)


def lueders_successive_oracle(x: HermitianObservable, y: HermitianObservable, rho) -> np.ndarray:
    """Joint table ``p[i, j] = Tr[Y_j P_i rho P_i]`` of projective X then Y."""
    r = _rho(rho)
    return np.array([[np.trace(q @ p @ r @ p).real for q in y.projectors] for p in x.projectors])


def _check_grid(x: HermitianObservable, u: np.ndarray) -> float:
    du = float(u[1] - u[0])
    span = float(np.ptp(x.eigenvalues)) if len(x.eigenvalues) > 1 else 0.0
    if du * span > 0.1 * (1 + 1e-9):
        raise GridTooCoarse(f"du * max gap = {du * span:.3g} > 0.1")
    return du


def ugrid_mean_oracle(x: HermitianObservable, a, u: np.ndarray, weight: np.ndarray, chunk: int = 65536) -> np.ndarray:
    """Direct average ``sum_i w(u_i) du exp(i u_i X) A exp(-i u_i X)`` over a uniform grid.

    The twirl is accumulated in the eigenbasis of X, where ``exp(iuX)`` is a
    diagonal phase, so each grid point costs O(d^2) instead of O(d^3).
    """
    a = as_matrix(a)
    u = np.asarray(u, dtype=float)
    w = np.asarray(weight, dtype=float)
    du = _check_grid(x, u)
    v = x.eigenvectors
    lam = x.column_eigenvalues
    averaged = np.zeros((len(lam), len(lam)), dtype=complex)
    for start in range(0, len(u), chunk):
        phases = np.exp(1j * np.outer(u[start:start + chunk], lam))
        averaged += (phases.T * (w[start:start + chunk] * du)) @ phases.conj()
    return v @ (averaged * (dagger(v) @ a @ v)) @ dagger(v)


def uniform_grid(T: float, du: float) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint grid on ``[-T, T]`` with the uniform probability density."""
    n = int(np.ceil(2 * T / du))
    du = 2 * T / n
    u = -T + (np.arange(n) + 0.5) * du
    return u, np.full(n, 1 / (2 * T))


def gaussian_grid(tau: float, du: float, cutoff: float = 8.0) -> tuple[np.ndarray, np.ndarray]:
    """Grid on ``[-cutoff tau, cutoff tau]`` with a normal density renormalised to the grid."""
    n = int(np.ceil(cutoff * tau / du))
    u = np.arange(-n, n + 1) * du
    w = np.exp(-0.5 * (u / tau) ** 2)
    return u, w / (w.sum() * du)


def dense_unitary_oracle(proc) -> float:
    """Residual between ``exp(-i X (x) P)`` by dense diagonalisation and the conditional shift."""
    from canmeas.lattice import momentum_observable
    from canmeas.process import coupling_unitary

    d, n = proc.sys_dim, proc.app_dim
    if d * n > MAX_ORACLE_DIM:
        raise TooLarge(f"N*d = {d * n} > {MAX_ORACLE_DIM}")
    h = np.kron(proc.observable.matrix, momentum_observable(proc.lattice).matrix)
    evals, evecs = np.linalg.eigh((h + dagger(h)) / 2)
    u_dense = (evecs * np.exp(-1j * evals)[None, :]) @ dagger(evecs)
    return float(np.max(np.abs(u_dense - coupling_unitary(proc))))


def lueders_identity_report(n_instances: int = 20, seed: int = 0, tol: float = 1e-12) -> OracleReport:
    """Y-mean of the collapse table over each X-eigenvalue against ``Tr[X(B) pinch(Y) rho]``."""
    from canmeas.kernels import pinching

    rng = np.random.default_rng(seed)
    worst, worst_case = 0.0, {}
    for k in range(n_instances):
        d = int(rng.integers(2, 6))
        basis = random_unitary(d, rng)
        xs = rng.integers(-3, 4, size=d).astype(float)
        x = spectral_decompose((basis * xs) @ dagger(basis))
        y = spectral_decompose(random_hermitian(d, rng, norm=1.0))
        rho = random_density_matrix(d, rng)
        table = lueders_successive_oracle(x, y, rho)
        err = abs(table.sum() - 1)
        py = pinching(x, y.matrix)
        for i in range(len(x.eigenvalues)):
            lhs = table[i] @ y.eigenvalues
            rhs = np.trace(x.projector(i) @ py @ rho).real
            err = max(err, abs(lhs - rhs))
        if err >= worst:
            worst, worst_case = err, {"instance": k, "dim": d, "x_eigenvalues": xs.tolist()}
    return OracleReport("lueders_identity", worst, n_instances, worst_case, seed, tol)


def ugrid_report(n_instances: int = 5, seed: int = 0) -> list[OracleReport]:
    """Pinching against u-grid averages with wide uniform and Gaussian weights."""
    from canmeas.kernels import pinching

    rng = np.random.default_rng(seed)
    reports = []
    for name, tol in (("ugrid_uniform_vs_pinching", 2e-4), ("ugrid_gaussian_vs_pinching", 1e-10)):
        worst, worst_case = 0.0, {}
        for k in range(n_instances):
            d = int(rng.integers(2, 6))
            xs = np.sort(rng.choice(np.arange(0, 9), size=d, replace=False)).astype(float)
            basis = random_unitary(d, rng)
            x = spectral_decompose((basis * xs) @ dagger(basis))
            a = random_hermitian(d, rng, norm=1.0) + 1j * random_hermitian(d, rng, norm=1.0)
            gaps = np.diff(x.eigenvalues)
            du = 0.1 / np.ptp(x.eigenvalues)
            if name.startswith("ugrid_uniform"):
                u, w = uniform_grid(1e4 / gaps.min(), du)
            else:
                u, w = gaussian_grid(10 / gaps.min(), du)
            err = float(np.max(np.abs(ugrid_mean_oracle(x, a, u, w) - pinching(x, a))))
            if err >= worst:
                worst, worst_case = err, {"instance": k, "dim": d, "x_eigenvalues": xs.tolist()}
        reports.append(OracleReport(name, worst, n_instances, worst_case, seed, tol))
    return reports


def dense_unitary_report(n_instances: int = 3, seed: int = 0, tol: float = 1e-8) -> OracleReport:
    from canmeas.lattice import dirac_family, make_lattice
    from canmeas.process import MeasurementProcess

    rng = np.random.default_rng(seed)
    worst, worst_case = 0.0, {}
    for k in range(n_instances):
        d = int(rng.integers(1, 4))
        lat = make_lattice(64, 16.0)
        prep = dirac_family(lat, "gaussian", [0.5])[0]
        ms = rng.integers(-4, 5, size=d)
        proc = MeasurementProcess.from_multipliers(ms, lat, prep, basis=random_unitary(d, rng))
        err = dense_unitary_oracle(proc)
        if err >= worst:
            worst, worst_case = err, {"instance": k, "dim": d, "multipliers": ms.tolist()}
    return OracleReport("dense_unitary", worst, n_instances, worst_case, seed, tol)
