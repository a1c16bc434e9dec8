"""Reduction and mollification: the finite-dimensional approximation pipeline.

Coefficients are reduced to a finite slice, convolved with the radial bump
mollifier on a grid, and multiplied by a smooth cut-off in the exhaustion.
The ladder report tracks the weighted error as the width delta shrinks.
"""

import numpy as np

from dbarl2 import domains as dm
from dbarl2 import reduction as rd
from dbarl2.forms import Form
from dbarl2.gaussmeasure import GaussianSpec, Quadrature
from dbarl2.multiindex import constant_family
from dbarl2.symfun import CylinderFn

spec = GaussianSpec(1)
fam = constant_family(1.0)

print("Mollifier kernel audits (unit mass, support, radial symmetry)")
for n in (1, 2):
    aud = rd.audit_mollifier(n)
    print(f"  n={n}: mass dev {aud.mass_deviation:.1e}, exterior max "
          f"{aud.exterior_max:.1e}, radial dev {aud.radial_deviation:.1e}")

print("\nSmoothing a bump profile: the L2 error shrinks with delta")
f = CylinderFn("bump((x(1)^2+y(1)^2)/0.25)", support_radius=0.5)
for d in (0.2, 0.1, 0.05):
    g = rd.mollify(f, d, grid_res=121)
    ax = g.axes()
    mesh = np.meshgrid(ax, ax, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    err = np.sqrt(rd.l2_gauss_grid(g.values - f(pts).reshape(g.shape), g, spec))
    print(f"  delta = {d}: ||f_delta - f||_L2(P) = {err:.5f}")

print("\nConvolution-transpose identity under the Gaussian measure")
g2 = CylinderFn("bump(((x(1)-0.1)^2+y(1)^2)/0.36)", support_radius=0.7)
res = rd.convolution_adjoint_residual(f, g2, 1, 0.1, spec, grid_res=121)
print(f"  residual = {res:.2e} (grid error budget 1e-4)")

print("\nFull pipeline with the cut-off factor")
form = Form((0, 1), {((), (1,)): CylinderFn("x(1)*bump((x(1)^2+y(1)^2)/0.16)",
                                            support_radius=0.4)}, fam)
rep = rd.approx_pipeline(form, dm.whole_space(), rho=2.0, n_ladder=[1],
                         delta_ladder=[0.2, 0.1, 0.05], spec=spec,
                         quad=Quadrature("monte_carlo", N=20_000, seed=404),
                         grid_res=121)
print("  n  delta   norm_error")
for row in rep.ladder:
    print(f"  {row.n}  {row.delta:<6} {row.norm_error:.6f}")
