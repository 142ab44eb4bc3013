import numpy as np
import pytest

from canmeas.errors import BinMisaligned, DimensionMismatch, NotCommensurate, SupportViolation, TooLarge, ZeroProbability
from canmeas.kernels import MeanKernel, pinching
from canmeas.lattice import dirac_family, make_lattice, shift_matrix
from canmeas.linalg import DensityState, random_density_matrix, random_hermitian, random_unitary, spectral_decompose
from canmeas.oracles import lueders_successive_oracle
from canmeas.process import (
    MeasurementProcess,
    PointerBins,
    apparatus_contraction,
    coupling_unitary,
    evolve_pure,
    evolved_state,
    heisenberg,
    heisenberg_pointer_check,
    joint_readout_residual,
    make_bins,
    momentum_twirl,
    pointer_distribution,
    pointer_moment_errors,
    pointer_readout_residual,
    posterior_state,
    srinivas_gap,
    srinivas_sides,
    successive_joint,
    wrapped_mass,
)

from conftest import SX, SZ


def small(ms, n=32, length=8.0, shape="gaussian", s=0.4, basis=None):
    lat = make_lattice(n, length)
    prep = dirac_family(lat, shape, [s])[0]
    return MeasurementProcess.from_multipliers(ms, lat, prep, basis)


def test_zero_shift_leaves_product_unchanged():
    proc = small([0, 3])
    psi = np.array([1.0, 0.0])
    assert np.allclose(evolve_pure(proc, psi), np.kron(psi, proc.apparatus_vector))


@pytest.mark.parametrize("m", [3, -5])
def test_eigenvector_packet_recentered(m):
    proc = small([m, 0], n=64, length=16.0)
    out = evolve_pure(proc, np.array([1.0, 0.0])).reshape(2, 64)[0]
    wf = proc.preparation.wavefunction
    density = np.abs(out) ** 2
    mean = np.sum(proc.lattice.positions * density)
    assert abs(mean - (wf.position_mean() + m * proc.lattice.dq)) < 1e-12
    assert np.allclose(out, np.roll(proc.apparatus_vector, m))


def test_superposition_matches_full_unitary(rng):
    proc = small([2, -3], basis=random_unitary(2, rng))
    psi = np.array([0.6, 0.8j])
    out = evolve_pure(proc, psi)
    ref = coupling_unitary(proc) @ np.kron(psi, proc.apparatus_vector)
    assert np.allclose(out, ref, atol=1e-13)
    assert abs(np.linalg.norm(out) - 1) <= 1e-12


def test_unitary_zero_observable_is_identity():
    proc = small([0, 0])
    assert np.allclose(coupling_unitary(proc), np.eye(64))


def test_unitary_single_eigenvalue_is_shift():
    proc = small([5])
    assert np.array_equal(coupling_unitary(proc), shift_matrix(32, 5))


def test_unitary_is_unitary(rng):
    lat = make_lattice(16, 16.0)
    prep = dirac_family(lat, "gaussian", [0.5])[0]
    proc = MeasurementProcess.from_multipliers([1, -2], lat, prep, random_unitary(2, rng))
    u = coupling_unitary(proc)
    assert np.max(np.abs(u @ u.conj().T - np.eye(32))) <= 1e-12


def test_unitary_too_large():
    lat = make_lattice(2048, 512.0)
    prep = dirac_family(lat, "gaussian", [1.0])[0]
    proc = MeasurementProcess.from_multipliers([1, -1, 0], lat, prep)
    with pytest.raises(TooLarge):
        coupling_unitary(proc)


def test_isometry_is_unitary_restricted(rng):
    proc = small([1, 4, -2], basis=random_unitary(3, rng))
    v = proc.isometry
    assert np.allclose(v.conj().T @ v, np.eye(3), atol=1e-13)
    ref = coupling_unitary(proc) @ np.kron(np.eye(3), proc.apparatus_vector[:, None])
    assert np.allclose(v, ref, atol=1e-13)


def test_not_commensurate():
    lat = make_lattice(32, 8.0)
    prep = dirac_family(lat, "gaussian", [0.4])[0]
    x = spectral_decompose(np.diag([0.1, 0.0]))
    with pytest.raises(NotCommensurate):
        MeasurementProcess(x, lat, prep)


def test_support_guard_reach():
    with pytest.raises(SupportViolation):
        small([14, 0], n=32, length=8.0, s=0.4)


def test_support_guard_wrapped_mass():
    # a heavy-tailed packet without envelope leaks across the boundary under a shift
    lat = make_lattice(256, 64.0)
    prep = dirac_family(lat, "two_sided_exp", [0.4], envelope=False)[0]
    assert wrapped_mass(prep.wavefunction.unit_vector, 4) > 1e-10
    with pytest.raises(SupportViolation):
        MeasurementProcess.from_multipliers([4, -4], lat, prep)


def test_heisenberg_trivial_cases():
    proc = small([0, 0])
    assert heisenberg_pointer_check(proc, np.cos) == 0.0
    proc = small([3, -2])
    assert heisenberg_pointer_check(proc, lambda q: np.ones_like(q)) <= 1e-14


def test_heisenberg_periodic_small():
    proc = small([1, -1], n=32, length=8.0)
    f = lambda q: np.cos(2 * np.pi * q / 8.0)
    assert heisenberg_pointer_check(proc, f) <= 1e-10


def test_heisenberg_non_periodic_wraps():
    # the cyclic lattice implements f(X + Q) with the sum reduced mod L
    proc = small([3, -2], n=32, length=8.0)
    assert heisenberg_pointer_check(proc, lambda q: q) <= 1e-10


def test_heisenberg_conjugation(rng):
    proc = small([1, -1])
    t = random_hermitian(64, rng)
    u = coupling_unitary(proc)
    assert np.allclose(heisenberg(proc, t), u.conj().T @ t @ u)


def test_pointer_distribution_eigenstate():
    proc = small([4, -4], n=64, length=16.0)
    probs = pointer_distribution(proc, DensityState.from_vector([1, 0]))
    assert np.allclose(probs, np.roll(proc.preparation.wavefunction.position_density, 4) * proc.lattice.dq)


def test_pointer_distribution_mixed_symmetric():
    proc = small([1, -1], n=64, length=16.0)
    probs = pointer_distribution(proc, DensityState(np.eye(2) / 2))
    q = proc.lattice.positions
    assert abs(np.sum(q * probs)) < 1e-13
    assert np.allclose(probs[1:], probs[1:][::-1])


@pytest.mark.parametrize("shape", ["gaussian", "uniform_window", "two_sided_exp"])
def test_pointer_moments(shape, rng):
    lat = make_lattice(256, 64.0)
    prep = dirac_family(lat, shape, [0.3])[0]
    proc = MeasurementProcess.from_multipliers([12, -4, 0], lat, prep, random_unitary(3, rng))
    mean_err, var_err = pointer_moment_errors(proc, random_density_matrix(3, rng))
    assert mean_err <= 1e-10
    assert var_err <= 1e-8


def test_gaussian_variance_is_s_squared(rng):
    lat = make_lattice(256, 64.0)
    prep = dirac_family(lat, "gaussian", [0.6])[0]
    proc = MeasurementProcess.from_multipliers([8, -8], lat, prep)
    rho = DensityState.from_vector([0.6, 0.8])
    probs = pointer_distribution(proc, rho)
    q = lat.positions
    var = np.sum(q**2 * probs) - np.sum(q * probs) ** 2
    x_var = 4.0 - (0.36 * 2 - 0.64 * 2) ** 2
    assert abs(var - (x_var + 0.36)) <= 1e-8


def test_bins_cover_cells():
    lat = make_lattice(32, 8.0)
    bins = make_bins(lat, count=4)
    assert bins.count == 4
    assert np.array_equal(np.bincount(bins.site_bins(lat)), [8, 8, 8, 8])
    with pytest.raises(ValueError):
        make_bins(lat, edges=[-1.0, 1.0])
    with pytest.raises(ValueError):
        make_bins(lat)


def test_bin_alignment():
    bins = PointerBins((-10.0, 0.5, 10.0))
    bins.check_alignment([-1.0, 1.0])
    with pytest.raises(BinMisaligned):
        bins.check_alignment([0.5, 1.0])
    with pytest.raises(BinMisaligned):
        bins.check_alignment([11.0])


def test_joint_identity_y_reproduces_pointer(rng):
    proc = small([3, -3], n=64, length=16.0)
    rho = random_density_matrix(2, rng)
    bins = make_bins(proc.lattice, count=8)
    joint = successive_joint(proc, rho, np.eye(2), bins)
    assert joint.table.shape == (8, 1)
    assert np.allclose(joint.table[:, 0], pointer_distribution(proc, rho, bins))
    assert abs(joint.table.sum() - 1) <= 1e-12


def test_joint_rejects_wrong_dimension():
    proc = small([3, -3])
    with pytest.raises(DimensionMismatch):
        successive_joint(proc, np.eye(2) / 2, np.eye(3), make_bins(proc.lattice, count=2))


def test_joint_commuting_matches_lueders():
    # Y = X-like, well separated eigenvalues: collapse table reached at finite s
    lat = make_lattice(256, 64.0)
    prep = dirac_family(lat, "gaussian", [0.4])[0]
    proc = MeasurementProcess.from_multipliers([16, -16], lat, prep)
    rho = DensityState.from_vector([1, 1])
    bins = make_bins(lat, count=2)
    y = spectral_decompose(SZ)
    joint = successive_joint(proc, rho, y, bins)
    ref = lueders_successive_oracle(proc.observable, y, rho)
    # bins are ordered low..high like the eigenvalues of X
    assert np.allclose(joint.table, ref, atol=1e-12)
    assert np.isclose(joint.table[1, 1], 0.5)


def test_contraction_trivial(rng):
    proc = small([2, -2])
    a = random_hermitian(2, rng)
    assert np.allclose(apparatus_contraction(proc, np.kron(a, np.eye(32))), a)
    fq = np.diag(np.cos(proc.lattice.positions))
    expected = proc.preparation.position_expectation(np.cos)
    assert np.allclose(apparatus_contraction(proc, np.kron(np.eye(2), fq)), expected * np.eye(2))


def test_contraction_shape_check():
    with pytest.raises(DimensionMismatch):
        apparatus_contraction(small([1, -1]), np.eye(10))


@pytest.mark.parametrize("shape", ["gaussian", "two_sided_exp"])
def test_contraction_equals_twirl(shape, rng):
    lat = make_lattice(64, 32.0)
    prep = dirac_family(lat, shape, [0.8])[0]
    proc = MeasurementProcess.from_multipliers([2, -1, 0], lat, prep, random_unitary(3, rng))
    y = random_hermitian(3, rng)
    got = apparatus_contraction(proc, heisenberg(proc, np.kron(y, np.eye(64))))
    assert np.max(np.abs(got - momentum_twirl(proc, y))) <= 1e-10


def test_twirl_is_characteristic_schur(rng):
    proc = small([2, -1], basis=random_unitary(2, rng))
    y = random_hermitian(2, rng)
    x = proc.observable
    gaps = x.column_eigenvalues[:, None] - x.column_eigenvalues[None, :]
    schur = proc.preparation.characteristic(gaps)
    v = x.eigenvectors
    ref = v @ (schur * (v.conj().T @ y @ v)) @ v.conj().T
    assert np.allclose(momentum_twirl(proc, y), ref, atol=1e-13)


def test_srinivas_sigma_x_rhs_zero():
    lat = make_lattice(256, 64.0)
    prep = dirac_family(lat, "gaussian", [0.1])[0]
    proc = MeasurementProcess.from_multipliers([4, -4], lat, prep)
    rho = DensityState.from_vector([1, 1])
    bins = make_bins(lat, count=2)
    lhs, rhs = srinivas_sides(proc, rho, SX, bins, [1])
    assert rhs == 0.0
    assert abs(lhs) < 1e-12


def test_srinivas_diagonal_rhs_half_eigenvalue():
    lat = make_lattice(256, 64.0)
    prep = dirac_family(lat, "gaussian", [0.1])[0]
    proc = MeasurementProcess.from_multipliers([4, -4], lat, prep)
    rho = DensityState.from_vector([1, 1])
    bins = make_bins(lat, count=2)
    y = proc.observable.matrix
    lhs, rhs = srinivas_sides(proc, rho, y, bins, [1])
    assert np.isclose(rhs, 0.5)
    assert abs(lhs - rhs) < 1e-12


def test_srinivas_full_range(rng):
    proc = small([3, -3], n=64, length=16.0, s=0.3)
    rho = random_density_matrix(2, rng)
    y = random_hermitian(2, rng)
    bins = make_bins(proc.lattice, count=2)
    lhs, rhs = srinivas_sides(proc, rho, y, bins, [0, 1])
    assert np.isclose(rhs, np.trace(y @ pinching(proc.observable, rho)).real)
    # the full-range Y-mean is the disturbed expectation Tr[twirl(Y) rho]
    assert np.isclose(lhs, np.trace(momentum_twirl(proc, y) @ rho).real, atol=1e-12)


def test_srinivas_guard():
    proc = small([4, 0], n=32, length=8.0)
    bins = PointerBins((-4.125, 0.0, 3.875))
    with pytest.raises(BinMisaligned):
        srinivas_gap(proc, np.eye(2) / 2, SX, bins, [1])


def test_srinivas_kernel_choice(rng):
    proc = small([4, -4], n=64, length=16.0, s=0.2)
    bins = make_bins(proc.lattice, count=2)
    rho = DensityState.from_vector([1, 1])
    gap_pinch = srinivas_gap(proc, rho, SX, bins, [1])
    gap_wide = srinivas_gap(proc, rho, SX, bins, [1], MeanKernel.cesaro(1e-3))
    assert gap_wide > 0.4 > gap_pinch


def test_posterior_eigenstate_repeatable():
    proc = small([4, -4], n=64, length=16.0)
    rho = DensityState.from_vector([1, 0])
    bins = make_bins(proc.lattice, count=2)
    post = posterior_state(proc, rho, bins, 1)
    assert np.max(np.abs(post.matrix - rho.matrix)) <= 1e-10


def test_posterior_collapses_superposition():
    lat = make_lattice(256, 64.0)
    rho = DensityState.from_vector([1, 1])
    bins = make_bins(lat, count=2)
    dist = []
    for prep in dirac_family(lat, "gaussian", [0.4, 0.2, 0.1]):
        proc = MeasurementProcess.from_multipliers([4, -4], lat, prep)
        post = posterior_state(proc, rho, bins, 1)
        assert abs(np.trace(post.matrix) - 1) <= 1e-10
        assert np.linalg.eigvalsh(post.matrix)[0] >= -1e-10
        dist.append(0.5 * np.abs(np.linalg.eigvalsh(post.matrix - np.diag([1, 0]))).sum())
    assert dist[-1] <= 0.05
    assert dist[0] > dist[-1]


def test_posterior_zero_probability():
    proc = small([4, -4], n=64, length=16.0)
    bins = make_bins(proc.lattice, count=8)
    with pytest.raises(ZeroProbability):
        posterior_state(proc, DensityState.from_vector([1, 0]), bins, 0)


def test_readout_residuals_shrink():
    lat = make_lattice(128, 32.0)
    res1, res2 = [], []
    for prep in dirac_family(lat, "gaussian", [0.8, 0.4, 0.2]):
        proc = MeasurementProcess.from_multipliers([4, -4], lat, prep)
        res1.append(pointer_readout_residual(proc, np.cos))
        res2.append(joint_readout_residual(proc, SX + 0.3 * SZ, np.cos))
    assert res1[0] > res1[1] > res1[2]
    assert res2[0] > res2[1] > res2[2]
    assert res2[2] < 1e-2
