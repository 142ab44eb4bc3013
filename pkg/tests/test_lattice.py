import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from canmeas.errors import BadSize, SupportViolation
from canmeas.lattice import (
    WaveFunction,
    dft_matrix,
    dirac_family,
    gaussian_packet,
    make_lattice,
    momentum_observable,
    position_observable,
    shift_matrix,
    to_momentum,
    to_position,
)


def test_lattice_arithmetic_16():
    lat = make_lattice(16, 16)
    assert lat.dq == 1
    assert np.array_equal(lat.positions, np.arange(-8, 8))
    assert np.isclose(lat.dp, 2 * np.pi / 16)


def test_lattice_arithmetic_64():
    lat = make_lattice(64, 32)
    assert lat.dq == 0.5
    assert np.isclose(lat.momenta.max(), 2 * np.pi * 31 / 32)


@given(st.integers(4, 11), st.floats(0.1, 1e3))
def test_phase_space_cell(log_n, length):
    lat = make_lattice(2**log_n, length)
    assert np.isclose(lat.dq * lat.dp * lat.n_points, 2 * np.pi)


@pytest.mark.parametrize("n, length", [(8, 1.0), (48, 1.0), (64, 0.0), (64, -2.0), (16.5, 1.0)])
def test_bad_sizes(n, length):
    with pytest.raises(BadSize):
        make_lattice(n, length)


def test_dft_unitary_and_matches_fft(rng):
    lat = make_lattice(32, 8.0)
    f = dft_matrix(lat)
    assert np.allclose(f @ f.conj().T, np.eye(32), atol=1e-12)
    phi = rng.normal(size=32) + 1j * rng.normal(size=32)
    assert np.allclose(to_momentum(lat, phi), f @ phi)
    assert np.allclose(to_position(lat, f @ phi), phi)


def test_position_observable_entries():
    q = position_observable(make_lattice(16, 16))
    assert np.allclose(q.matrix, np.diag(np.arange(-8, 8)))


def test_momentum_kills_constant():
    p = momentum_observable(make_lattice(16, 4.0))
    assert np.max(np.abs(p.matrix @ np.ones(16))) < 1e-12


def test_momentum_spectrum_dense_eigensolver():
    lat = make_lattice(64, 32)
    p = momentum_observable(lat)
    evals = np.linalg.eigvalsh(p.matrix)
    assert np.max(np.abs(np.sort(evals) - 2 * np.pi * np.arange(-32, 32) / 32)) <= 1e-10


@pytest.mark.parametrize("m", [0, 1, -3, 7])
def test_momentum_generates_shifts(m):
    lat = make_lattice(32, 8.0)
    p = momentum_observable(lat)
    u = p.eigenvectors @ np.diag(np.exp(-1j * m * lat.dq * p.column_eigenvalues)) @ p.eigenvectors.conj().T
    assert np.allclose(u, shift_matrix(32, m), atol=1e-12)


def test_packet_symmetric_and_centered():
    lat = make_lattice(256, 64)
    wf = gaussian_packet(lat, 0.0, 0.0, 0.5)
    assert abs(wf.position_mean()) < 1e-12
    a = wf.amplitudes
    assert np.max(np.abs(a.imag)) < 1e-15
    # q_j -> -q_j maps j -> N - j (site 0 sits at -L/2)
    assert np.allclose(a[1:], a[1:][::-1])


@pytest.mark.parametrize("s", [0.2, 0.3, 0.5, 1.0, 2.0])
def test_packet_moments_resolved(s):
    lat = make_lattice(256, 64)
    wf = gaussian_packet(lat, 0.0, 0.0, s)
    assert abs(wf.position_std() / s - 1) < 0.02
    assert abs(wf.momentum_std() * 2 * s - 1) < 0.05
    assert wf.position_std() * wf.momentum_std() >= 0.5 * (1 - 0.02)


def test_packet_underresolved_breaks_uncertainty():
    # with s < dq the sampled packet no longer saturates the continuum bound
    lat = make_lattice(256, 64)
    wf = gaussian_packet(lat, 0.0, 0.0, 0.1)
    assert wf.position_std() * wf.momentum_std() < 0.49


def test_packet_momentum_peak():
    lat = make_lattice(256, 64)
    wf = gaussian_packet(lat, 1.0, 3.0, 1.0)
    assert abs(lat.momenta[np.argmax(wf.momentum_density)] - 3.0) <= lat.dp


def test_packet_guard():
    lat = make_lattice(256, 64)
    with pytest.raises(SupportViolation):
        gaussian_packet(lat, 0.0, 0.0, 16 / 3)
    with pytest.raises(SupportViolation):
        gaussian_packet(lat, 30.0, 0.0, 1.0)
    with pytest.raises(SupportViolation):
        gaussian_packet(lat, 0.0, 0.0, 0.0)


def test_wavefunction_norm_check():
    lat = make_lattice(16, 16)
    with pytest.raises(ValueError):
        WaveFunction(lat, np.ones(16))
    wf = WaveFunction.from_unnormalized(lat, np.ones(16))
    assert np.isclose(np.sum(wf.position_density) * lat.dq, 1)
    assert np.isclose(np.linalg.norm(wf.unit_vector), 1)


def test_gaussian_family_cos_converges():
    lat = make_lattice(256, 64)
    vals = [p.position_expectation(np.cos).real for p in dirac_family(lat, "gaussian", [0.4, 0.2, 0.1])]
    assert vals[0] < vals[1] < vals[2] < 1
    assert 1 - vals[2] < 5e-3


def test_uniform_window_flat():
    lat = make_lattice(256, 64)
    prep = dirac_family(lat, "uniform_window", [0.4])[0]
    # away from the window edge, where the envelope smoothing acts
    inner = np.abs(lat.momenta) <= 0.8 * prep.scale
    d = prep.momentum_density[inner]
    assert d.min() / d.max() > 0.95
    outside = np.abs(lat.momenta) > prep.scale + 1.0
    assert prep.momentum_weights[outside].sum() < 1e-3


def test_two_sided_exp_decay():
    lat = make_lattice(256, 64)
    prep = dirac_family(lat, "two_sided_exp", [0.4])[0]
    p, d = lat.momenta, prep.momentum_density
    pick = (p > 1) & (p < 6)
    slope = np.polyfit(p[pick], np.log(d[pick]), 1)[0]
    assert abs(slope + 1 / prep.scale) < 0.05 / prep.scale


@pytest.mark.parametrize("shape", ["gaussian", "uniform_window", "two_sided_exp"])
@pytest.mark.parametrize("s", [0.4, 0.2, 0.1, 0.05])
def test_parseval(shape, s):
    lat = make_lattice(256, 64)
    prep = dirac_family(lat, shape, [s])[0]
    assert abs(prep.momentum_weights.sum() - 1) < 1e-12
    assert abs(prep.characteristic(0.0) - 1) < 1e-12


def test_characteristic_is_pointer_overlap():
    # <alpha | shift(m) alpha> equals the momentum characteristic at m dq
    lat = make_lattice(128, 32)
    prep = dirac_family(lat, "two_sided_exp", [0.3])[0]
    phi = prep.wavefunction.unit_vector
    for m in (1, 3, -5):
        overlap = np.vdot(phi, np.roll(phi, m))
        assert np.isclose(overlap, prep.characteristic(m * lat.dq), atol=1e-12)


def test_envelope_can_be_disabled():
    lat = make_lattice(256, 64)
    bare = dirac_family(lat, "two_sided_exp", [0.4], envelope=False)[0]
    wrapped = dirac_family(lat, "two_sided_exp", [0.4])[0]
    edge = np.abs(lat.positions) > 24
    assert bare.wavefunction.position_density[edge].max() > 1e3 * wrapped.wavefunction.position_density[edge].max()
