"""Conditional expectations onto the commutant of an observable.

An invariant mean acts on a twirl ``u -> exp(iuX) A exp(-iuX)`` only through
the characters ``u -> exp(iu(x_j - x_k))``, so the conditional expectation is
a Schur multiplier in the eigenbasis of X: entry ``(j, k)`` is scaled by
``kappa(x_j - x_k)``.  A :class:`MeanKernel` is that function of the gap.
"""
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from canmeas.errors import BadWeight, DimensionMismatch
from canmeas.linalg import DEFAULT_GAP_TOL, HermitianObservable, as_matrix, dagger


class KernelFamily(str, Enum):
    EXACT_PINCHING = "exact_pinching"
    CESARO = "cesaro"
    GAUSSIAN_WEIGHT = "gaussian_weight"
    LATTICE_UNIFORM = "lattice_uniform"


_SPEC_NAMES = {
    KernelFamily.EXACT_PINCHING: "pinching",
    KernelFamily.CESARO: "cesaro",
    KernelFamily.GAUSSIAN_WEIGHT: "gauss",
    KernelFamily.LATTICE_UNIFORM: "lattice",
}
_ALIASES = {
    "pinching": KernelFamily.EXACT_PINCHING,
    "exact_pinching": KernelFamily.EXACT_PINCHING,
    "cesaro": KernelFamily.CESARO,
    "gauss": KernelFamily.GAUSSIAN_WEIGHT,
    "gaussian_weight": KernelFamily.GAUSSIAN_WEIGHT,
    "lattice": KernelFamily.LATTICE_UNIFORM,
    "lattice_uniform": KernelFamily.LATTICE_UNIFORM,
}
_REQUIRED = {
    KernelFamily.EXACT_PINCHING: (),
    KernelFamily.CESARO: ("T",),
    KernelFamily.GAUSSIAN_WEIGHT: ("tau",),
    KernelFamily.LATTICE_UNIFORM: ("N", "L"),
}


@dataclass(frozen=True)
class MeanKernel:
    """Gap function ``kappa`` of a mean on characters.

    ==================  ==============================  =====================
    family              kappa(D)                        weight over u
    ==================  ==============================  =====================
    exact_pinching      1 if D == 0 else 0              any invariant mean
    cesaro(T)           sin(T D) / (T D)                uniform on [-T, T]
    gaussian_weight     exp(-tau^2 D^2 / 2)             normal, std tau
    lattice_uniform     Re N^-1 sum_k exp(i p_k D)      uniform on lattice p_k
    ==================  ==============================  =====================

    ``exact_pinching`` treats ``|D| <= gap_tol`` as zero, matching the
    eigenvalue grouping of :func:`~canmeas.linalg.spectral_decompose`.
    """

    family: KernelFamily
    params: tuple[tuple[str, float], ...] = ()
    gap_tol: float = field(default=DEFAULT_GAP_TOL, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        params = dict(self.params)
        missing = set(_REQUIRED[self.family]) - set(params)
        extra = set(params) - set(_REQUIRED[self.family])
        if missing or extra:
            raise ValueError(f"{self.family.value} needs parameters {_REQUIRED[self.family]}")
        for name, value in params.items():
            if not value > 0:
                raise ValueError(f"kernel parameter {name} must be positive")
        if self.family is KernelFamily.LATTICE_UNIFORM:
            n = params["N"]
            if n != int(n) or n < 2 or int(n) % 2:
                raise ValueError("lattice kernel needs an even integer N")
        object.__setattr__(self, "params", tuple(sorted(params.items())))

    @classmethod
    def pinching(cls) -> "MeanKernel":
        return cls(KernelFamily.EXACT_PINCHING)

    @classmethod
    def cesaro(cls, T: float) -> "MeanKernel":
        return cls(KernelFamily.CESARO, (("T", float(T)),))

    @classmethod
    def gaussian(cls, tau: float) -> "MeanKernel":
        return cls(KernelFamily.GAUSSIAN_WEIGHT, (("tau", float(tau)),))

    @classmethod
    def lattice_uniform(cls, n_points: int, length: float) -> "MeanKernel":
        return cls(KernelFamily.LATTICE_UNIFORM, (("L", float(length)), ("N", float(n_points))))

    def __getitem__(self, name: str) -> float:
        return dict(self.params)[name]

    def __call__(self, delta):
        d = np.asarray(delta, dtype=float)
        fam = self.family
        if fam is KernelFamily.EXACT_PINCHING:
            return np.where(np.abs(d) <= self.gap_tol, 1.0, 0.0)
        if fam is KernelFamily.CESARO:
            return np.sinc(self["T"] * d / np.pi)
        if fam is KernelFamily.GAUSSIAN_WEIGHT:
            return np.exp(-0.5 * (self["tau"] * d) ** 2)
        n, length = int(self["N"]), self["L"]
        k = np.arange(-n // 2, n // 2)
        p = 2 * np.pi * k / length
        return np.cos(np.multiply.outer(d, p)).mean(axis=-1)

    @property
    def spec(self) -> str:
        """String form accepted by :func:`parse_kernel`."""
        name = _SPEC_NAMES[self.family]
        if not self.params:
            return name
        args = ",".join(f"{k}={v:.17g}" for k, v in self.params)
        return f"{name}:{args}"


def parse_kernel(spec: str) -> MeanKernel:
    """Parse ``"pinching"``, ``"cesaro:T=10"``, ``"gauss:tau=2"`` or ``"lattice:N=64,L=16"``."""
    m = re.fullmatch(r"\s*([a-z_]+)\s*(?::(.*))?", spec)
    if not m or m.group(1) not in _ALIASES:
        raise ValueError(f"unknown kernel spec {spec!r}")
    params = []
    if m.group(2):
        for item in m.group(2).split(","):
            key, _, value = item.partition("=")
            try:
                params.append((key.strip(), float(value)))
            except ValueError:
                raise ValueError(f"bad kernel parameter {item!r} in {spec!r}") from None
    return MeanKernel(_ALIASES[m.group(1)], tuple(params))


def kernel_matrix(x: HermitianObservable, kappa: MeanKernel) -> np.ndarray:
    """Schur multiplier ``kappa(x_j - x_k)`` in the eigenvector basis of ``x``."""
    values = x.column_eigenvalues
    gaps = values[:, None] - values[None, :]
    same = x.groups[:, None] == x.groups[None, :]
    return np.where(same, 1.0, kappa(gaps))


def conditional_expectation(x: HermitianObservable, a, kappa: MeanKernel) -> np.ndarray:
    """``E^X[A]`` for the mean described by ``kappa``, in the original basis."""
    a = as_matrix(a)
    if a.shape != x.matrix.shape:
        raise DimensionMismatch(f"{a.shape} vs {x.matrix.shape}")
    v = x.eigenvectors
    return v @ (kernel_matrix(x, kappa) * (dagger(v) @ a @ v)) @ dagger(v)


def pinching(x: HermitianObservable, a) -> np.ndarray:
    """Block diagonal part ``sum_i P_i A P_i``."""
    return conditional_expectation(x, a, MeanKernel.pinching())


def scalar_mean(f: Callable, u: np.ndarray, weight: np.ndarray) -> complex:
    """Weighted-average surrogate ``eta(f) = sum_i f(u_i) w(u_i) du`` on a uniform grid.

    Raises
    ------
    BadWeight
        If the weight is negative somewhere or does not integrate to one.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(weight, dtype=float)
    if u.shape != w.shape or u.ndim != 1 or len(u) < 2:
        raise BadWeight("weight and grid must be matching 1-d arrays")
    du = np.diff(u)
    if np.ptp(du) > 1e-9 * abs(du[0]):
        raise BadWeight("u-grid must be uniform")
    du = du[0]
    if np.any(w < 0):
        raise BadWeight("weight has negative entries")
    total = w.sum() * du
    if abs(total - 1) > 1e-9:
        raise BadWeight(f"weight integrates to {total:.12g}, not 1")
    return complex(np.sum(np.asarray(f(u)) * w) * du)
