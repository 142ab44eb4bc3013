"""The pointer: a periodic lattice with a discrete Fourier pair (Q, P).

Translating by whole cells is generated exactly by P, and Gaussian packets
saturate the uncertainty bound as long as the lattice resolves them.
"""
import numpy as np

from canmeas.lattice import dirac_family, gaussian_packet, make_lattice, momentum_observable, shift_matrix

lat = make_lattice(256, 64.0)
print(f"N={lat.n_points}  L={lat.length}  dq={lat.dq}  dp={lat.dp:.4f}")

# %% exp(-i m dq P) is the cyclic shift by m sites
small = make_lattice(32, 8.0)
p = momentum_observable(small)
m = 3
u = p.eigenvectors @ np.diag(np.exp(-1j * m * small.dq * p.column_eigenvalues)) @ p.eigenvectors.conj().T
print("shift generated by P, deviation:", np.max(np.abs(u - shift_matrix(32, m))))

# %% Uncertainty products; the last rows are under-resolved (s < dq)
print("   s     std_Q    std_P   product")
for s in (2.0, 1.0, 0.5, 0.2, 0.15, 0.1):
    wf = gaussian_packet(lat, 0.0, 0.0, s)
    print(f"{s:5.2f}  {wf.position_std():7.4f}  {wf.momentum_std():7.4f}  {wf.position_std() * wf.momentum_std():.4f}")

# %% Approaching a sharp pointer: <cos Q> -> 1 for each shape
for shape in ("gaussian", "uniform_window", "two_sided_exp"):
    vals = [p.position_expectation(np.cos).real for p in dirac_family(lat, shape, [0.4, 0.2, 0.1, 0.05])]
    print(f"{shape:15s}", " ".join(f"{v:.5f}" for v in vals))
