"""Periodic position lattice for the pointer degree of freedom.

Units follow h = 2*pi (hbar = 1).  Positions are ``q_j = (j - N/2) dq`` and
momenta ``p_k = 2 pi k / L`` for ``k = -N/2 .. N/2 - 1``.  The unitary discrete
Fourier transform used throughout is ``F[k, j] = exp(-i p_k q_j) / sqrt(N)``,
which makes ``exp(-i a P)`` the translation ``alpha(q) -> alpha(q - a)``
exactly whenever ``a`` is a multiple of ``dq``.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from canmeas.errors import BadSize, SupportViolation
from canmeas.linalg import HermitianObservable, dagger, from_eigensystem

NORM_TOL = 1e-10


class MomentumShape(str, Enum):
    GAUSSIAN = "gaussian"
    UNIFORM_WINDOW = "uniform_window"
    TWO_SIDED_EXP = "two_sided_exp"


@dataclass(frozen=True)
class Lattice:
    n_points: int
    length: float

    @property
    def dq(self) -> float:
        return self.length / self.n_points

    @property
    def dp(self) -> float:
        return 2 * np.pi / self.length

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(-self.n_points // 2, self.n_points // 2)

    @property
    def positions(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points // 2) * self.dq

    @property
    def momenta(self) -> np.ndarray:
        return self.wavenumbers * self.dp

    def wrap(self, q):
        """Reduce positions modulo L into [-L/2, L/2)."""
        half = self.length / 2
        return np.mod(np.asarray(q, dtype=float) + half, self.length) - half


def make_lattice(n_points: int, length: float) -> Lattice:
    n = int(n_points)
    if n != n_points or n < 16 or n & (n - 1):
        raise BadSize(f"n_points must be a power of two >= 16, got {n_points}")
    if not length > 0:
        raise BadSize(f"length must be positive, got {length}")
    return Lattice(n, float(length))


def dft_matrix(lat: Lattice) -> np.ndarray:
    return np.exp(-1j * np.outer(lat.momenta, lat.positions)) / np.sqrt(lat.n_points)


def to_momentum(lat: Lattice, phi: np.ndarray) -> np.ndarray:
    """Apply ``F`` to a position-space vector (FFT route)."""
    signs = (-1.0) ** lat.wavenumbers
    return signs * np.fft.fftshift(np.fft.fft(phi)) / np.sqrt(lat.n_points)


def to_position(lat: Lattice, phi_hat: np.ndarray) -> np.ndarray:
    signs = (-1.0) ** lat.wavenumbers
    return np.fft.ifft(np.fft.ifftshift(signs * phi_hat)) * np.sqrt(lat.n_points)


def position_observable(lat: Lattice) -> HermitianObservable:
    q = lat.positions
    return from_eigensystem(np.diag(q).astype(complex), q, np.eye(lat.n_points))


def momentum_observable(lat: Lattice) -> HermitianObservable:
    f = dft_matrix(lat)
    p = lat.momenta
    matrix = dagger(f) @ (p[:, None] * f)
    return from_eigensystem(matrix, p, dagger(f))


def shift_matrix(n_points: int, m: int) -> np.ndarray:
    """Cyclic translation by ``m`` sites: ``e_j -> e_{j+m}``."""
    return np.roll(np.eye(n_points), m, axis=0)


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Lattice wavefunction normalised so that ``sum |alpha_j|^2 dq = 1``."""

    lattice: Lattice
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (self.lattice.n_points,):
            raise BadSize(f"expected {self.lattice.n_points} amplitudes, got {a.shape}")
        norm = np.sum(np.abs(a) ** 2) * self.lattice.dq
        if abs(norm - 1) > NORM_TOL:
            raise ValueError(f"wavefunction norm {norm:.12g} != 1")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_unnormalized(cls, lat: Lattice, values) -> "WaveFunction":
        values = np.asarray(values, dtype=complex)
        return cls(lat, values / np.sqrt(np.sum(np.abs(values) ** 2) * lat.dq))

    @property
    def unit_vector(self) -> np.ndarray:
        """Amplitudes as a unit vector of the N-dimensional lattice space."""
        return self.amplitudes * np.sqrt(self.lattice.dq)

    @property
    def position_density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def momentum_amplitudes(self) -> np.ndarray:
        return to_momentum(self.lattice, self.unit_vector)

    @property
    def momentum_density(self) -> np.ndarray:
        return np.abs(self.momentum_amplitudes) ** 2 / self.lattice.dp

    def position_mean(self) -> float:
        return float(np.sum(self.lattice.positions * self.position_density) * self.lattice.dq)

    def position_std(self) -> float:
        w = self.position_density * self.lattice.dq
        q = self.lattice.positions
        return float(np.sqrt(np.sum(w * q**2) - np.sum(w * q) ** 2))

    def momentum_std(self) -> float:
        w = self.momentum_density * self.lattice.dp
        p = self.lattice.momenta
        return float(np.sqrt(np.sum(w * p**2) - np.sum(w * p) ** 2))


@dataclass(frozen=True, eq=False)
class ApparatusPreparation:
    """A normal pointer state standing in for a Dirac state.

    ``momentum_shape`` plays the role of the chosen invariant mean: the
    momentum functional of the preparation is the weighted average over
    ``momentum_density``.  ``scale`` is the momentum-space scale parameter of
    the shape (proportional to ``1/position_width``).
    """

    wavefunction: WaveFunction
    position_width: float
    momentum_shape: MomentumShape
    scale: float
    momentum_density: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "momentum_density", self.wavefunction.momentum_density)

    @property
    def lattice(self) -> Lattice:
        return self.wavefunction.lattice

    @property
    def momentum_weights(self) -> np.ndarray:
        """Probability of each momentum grid point (density times dp)."""
        return self.momentum_density * self.lattice.dp

    def position_expectation(self, f: Callable) -> complex:
        w = self.wavefunction.position_density * self.lattice.dq
        return complex(np.sum(np.asarray(f(self.lattice.positions)) * w))

    def momentum_expectation(self, f: Callable) -> complex:
        return complex(np.sum(np.asarray(f(self.lattice.momenta)) * self.momentum_weights))

    def characteristic(self, delta):
        """Momentum characteristic function ``sum_k w_k exp(i p_k delta)``.

        This is the finite-width mean kernel the preparation induces on
        spectral gaps of the measured observable.
        """
        delta = np.asarray(delta, dtype=float)
        phases = np.exp(1j * np.multiply.outer(delta, self.lattice.momenta))
        return phases @ self.momentum_weights


def _check_packet_guard(lat: Lattice, s: float, q0: float = 0.0):
    if not s > 0:
        raise SupportViolation(f"packet width must be positive, got {s}")
    if not 3 * s < lat.length / 4:
        raise SupportViolation(f"3s = {3 * s:g} must be < L/4 = {lat.length / 4:g}")
    if not abs(q0) + 3 * s < lat.length / 2:
        raise SupportViolation(f"|q0| + 3s = {abs(q0) + 3 * s:g} must be < L/2")


def gaussian_packet(lat: Lattice, q0: float, p0: float, s: float) -> WaveFunction:
    """Sampled Gaussian ``exp(-(q-q0)^2 / 4s^2) exp(i p0 q)``; position std is ``s``."""
    _check_packet_guard(lat, s, q0)
    q = lat.positions
    values = np.exp(-((q - q0) ** 2) / (4 * s * s)) * np.exp(1j * p0 * q)
    return WaveFunction.from_unnormalized(lat, values)


def dirac_family(
    lat: Lattice,
    shape: MomentumShape | str,
    s_list: Sequence[float],
    envelope: float | bool = True,
) -> list[ApparatusPreparation]:
    """Normal preparations approaching a Dirac state as ``s -> 0``.

    ``gaussian``
        Gaussian packet, position std ``s``, momentum std ``1/(2s)``.
    ``uniform_window``
        Flat momentum density on ``|p| <= sqrt(3)/(2s)`` (momentum std ``1/(2s)``).
    ``two_sided_exp``
        Momentum density ``exp(-|p|/b)/(2b)`` with ``b = 1/(2s)``; the position
        amplitude is a Lorentzian of half-width ``s``.

    The two momentum-built shapes have algebraic position tails which, on a
    periodic lattice, would wrap around.  They are multiplied by a Gaussian
    position envelope ``exp(-q^2 / 4w^2)`` with ``w = L/16`` by default
    (``envelope=False`` disables it, a float sets ``w``).  The envelope only
    smooths the momentum density on the scale ``1/w``.
    """
    shape = MomentumShape(shape)
    if shape is not MomentumShape.GAUSSIAN and envelope is True:
        envelope = lat.length / 16
    out = []
    for s in s_list:
        s = float(s)
        _check_packet_guard(lat, s)
        if shape is MomentumShape.GAUSSIAN:
            wf = gaussian_packet(lat, 0.0, 0.0, s)
            out.append(ApparatusPreparation(wf, s, shape, 1 / (2 * s)))
            continue
        p = np.abs(lat.momenta)
        if shape is MomentumShape.UNIFORM_WINDOW:
            scale = np.sqrt(3) / (2 * s)
            amp_hat = (p <= scale).astype(float)
        else:
            scale = 1 / (2 * s)
            amp_hat = np.exp(-p / (2 * scale))
        values = to_position(lat, amp_hat)
        if envelope:
            values = values * np.exp(-lat.positions**2 / (4 * float(envelope) ** 2))
        wf = WaveFunction.from_unnormalized(lat, values)
        out.append(ApparatusPreparation(wf, s, shape, scale))
    return out
