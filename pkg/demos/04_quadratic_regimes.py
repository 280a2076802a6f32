"""The quadratic-drift model dxx + x^2 dy - dt and its bound regimes.

The Y-component integrates a square, so it only moves up: the kernel
vanishes for eta - y <= 0 and the two-sided bounds split into a Gaussian-like
far regime and a small-ball near regime, with an unclassified band between
them.  A commutator of the fields vanishes on {x = 0}, so no group leaves
the operator invariant; lifting with an extra variable w (drift x) restores
a group and a dilation, and the attainable set of the origin has the
closed-form description 0 <= y <= -t, w^2 <= -t y (coordinates (x, w, y, t)).
"""

import numpy as np

import hypoflow as hf
from hypoflow.quadratic import Regime, certify_grid_reachability, far_near_shape_fits

print("== regime classification ==")
cases = [
    (0, 1, 1, 0, 0, 0),      # downward displacement: impossible
    (0, 0, 1, 0, 2, 0),      # far
    (0, 0, 1, 0, 0.3, 0),    # near
    (0, 0, 1, 0, 0.75, 0),   # in-between band
]
for c in cases:
    print(f"  {c} -> {hf.regime_classify(*c).value}")

print("\n== simulated density vs the regime shapes (n = 3e5) ==")
batch = hf.euler_maruyama(hf.QUADRATIC_LIFTED, [0.0, 0.0, 0.0], 1.0, 1e-3,
                          300_000, seed=21)
print(f"support violations (Y <= y0): {hf.support_fraction(batch.endpoints, 0.0)}")
fits = far_near_shape_fits(batch.endpoints)
print(f"far regime : log density vs dy       slope {fits['far_slope']:.3f}, "
      f"R^2 {fits['far_r2']:.4f}")
print(f"near regime: log density vs 1/dy     slope {fits['near_slope']:.4f}, "
      f"R^2 {fits['near_r2']:.4f}")
print(f"far-regime envelope value at (dy=2, gap=1): "
      f"{hf.regime_envelope(Regime.FAR, (1.0, 1.0), 0, 0, 1, 0, 2, 0):.5f}")

print("\n== lifted group and attainable set ==")
z0 = [0.5, -0.2, 0.1, 1.0]
z = [0.2, 0.3, -0.1, 0.5]
print(f"group law:   z0 o z = {np.round(hf.group_compose(hf.QUADRATIC_LIFTED, z0, z), 4)}")
print(f"dilation:    delta_2(1,1,1,1) = {hf.dilate(hf.QUADRATIC_LIFTED, 2.0, [1, 1, 1, 1])}")
axis = np.linspace(-0.96, 0.96, 17)
mask = certify_grid_reachability(0.48, axis, eps=5e-3, dedup=0.01)
pts = np.argwhere(mask)
print(f"reachability sweep at t = -0.48 certified {len(pts)} grid points, e.g.:")
for ix, iw, iy in pts[: min(4, len(pts))]:
    p = [axis[ix], axis[iw], axis[iy], -0.48]
    print(f"   (x,w,y,t) = {np.round(p, 3)}  predicate: {hf.attainable_quadratic(p)}")
