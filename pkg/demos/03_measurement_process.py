"""Coupling a two-level system to the pointer and reading it out.

The coupling displaces the packet by the eigenvalue of X, so the pointer
distribution is a mixture of shifted packets.  Contracting the pointer out of
the Heisenberg-evolved Y gives a momentum-weighted twirl of Y.
"""
import numpy as np

from canmeas.lattice import dirac_family, make_lattice
from canmeas.linalg import DensityState
from canmeas.process import (
    MeasurementProcess,
    apparatus_contraction,
    heisenberg,
    make_bins,
    momentum_twirl,
    pointer_distribution,
    pointer_moment_errors,
    posterior_state,
)

np.set_printoptions(precision=4, suppress=True)
lat = make_lattice(256, 64.0)
rho = DensityState.from_vector([1, 1])
sx = np.array([[0, 1], [1, 0]], dtype=complex)

prep = dirac_family(lat, "gaussian", [0.5])[0]
proc = MeasurementProcess.from_multipliers([8, -8], lat, prep)
print("X eigenvalues:", proc.observable.eigenvalues, "shifts in sites:", proc.shifts)

probs = pointer_distribution(proc, rho)
peaks = lat.positions[np.argsort(probs)[-2:]]
print("pointer peaks near", np.sort(peaks))
print("mean / variance identity errors:", pointer_moment_errors(proc, rho))

# %% Finite-width contraction against the momentum twirl
got = apparatus_contraction(proc, heisenberg(proc, np.kron(sx, np.eye(lat.n_points))))
print("contraction of U*(sx)U:\n", got)
print("differs from the twirl by", np.max(np.abs(got - momentum_twirl(proc, sx))))

# %% Conditioning on the positive bin collapses the state
bins = make_bins(lat, count=2)
for p in dirac_family(lat, "gaussian", [0.4, 0.2, 0.1]):
    post = posterior_state(MeasurementProcess.from_multipliers([4, -4], lat, p), rho, bins, 1)
    print(f"s={p.position_width}: posterior diag {np.diag(post.matrix).real}, coherence {abs(post.matrix[0, 1]):.2e}")
