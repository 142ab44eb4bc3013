"""Conditional expectations onto the commutant of an observable.

A mean over the unitary twirl ``u -> exp(iuX) A exp(-iuX)`` acts on the
off-diagonal entries of A (in the eigenbasis of X) through a function of the
spectral gap alone.  Here we compare the exact pinching with finite-window
surrogates and with a brute-force average over a u-grid.
"""
import numpy as np

from canmeas.kernels import MeanKernel, conditional_expectation, pinching
from canmeas.linalg import spectral_decompose
from canmeas.oracles import gaussian_grid, ugrid_mean_oracle, uniform_grid

np.set_printoptions(precision=4, suppress=True)

x = spectral_decompose(np.diag([0.0, 1.0, 3.0]))
a = np.arange(9.0).reshape(3, 3)

print("A =\n", a)
print("pinching keeps only the diagonal:\n", pinching(x, a).real)

# %% Finite windows leave a residue that decays with the window
for T in (1.0, 10.0, 100.0):
    e = conditional_expectation(x, a, MeanKernel.cesaro(T)).real
    print(f"cesaro T={T:>5}: largest off-diagonal {np.max(np.abs(e - np.diag(np.diag(e)))):.4f}")

# %% The closed-form kernel against an explicit u-grid average
u, w = uniform_grid(10.0, 1e-3)
grid = ugrid_mean_oracle(x, a, u, w)
closed = conditional_expectation(x, a, MeanKernel.cesaro(10.0))
print("u-grid vs closed form, uniform window:", np.max(np.abs(grid - closed)))

u, w = gaussian_grid(10.0, 0.02)
grid = ugrid_mean_oracle(x, a, u, w)
print("u-grid vs pinching, wide Gaussian weight:", np.max(np.abs(grid - pinching(x, a))))
