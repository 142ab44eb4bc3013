"""Successive measurement: how close is a finite pointer to projective collapse?

For a pointer event B the Y-mean of the joint law is compared with
Tr[X(B) E[Y] rho], with E the pinching.  The gap shrinks as the pointer
sharpens, yet never reaches zero when Y has coherences between eigenspaces.
"""
import numpy as np

from canmeas.lattice import dirac_family, make_lattice
from canmeas.linalg import DensityState
from canmeas.process import MeasurementProcess, make_bins, srinivas_sides

lat = make_lattice(256, 64.0)
rho = DensityState.from_vector([1, 1])
bins = make_bins(lat, count=2)
sx = np.array([[0, 1], [1, 0]], dtype=complex)
s_list = [0.4, 0.2, 0.1, 0.05]

for shape in ("two_sided_exp", "gaussian"):
    print(f"\n{shape}")
    print("   s    gap(sx)     gap(X)")
    for prep in dirac_family(lat, shape, s_list):
        proc = MeasurementProcess.from_multipliers([4, -4], lat, prep)
        g = [abs(np.subtract(*srinivas_sides(proc, rho, y, bins, [1]))) for y in (sx, proc.observable.matrix)]
        print(f"{prep.position_width:5.2f}  {g[0]:.3e}  {g[1]:.3e}")

# Gaussian pointers converge so fast that the gap drops below double
# precision; the heavy-tailed family shows the algebraic approach.
