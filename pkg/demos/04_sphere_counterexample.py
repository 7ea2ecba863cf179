"""Where the two-domain law dies: rotations of S^2 with fixed poles.

The polar rotation action on the 2-sphere is not free, and the equivariant
eigenfunctions are the ordinary spherical harmonics.  The real part of
Y_N^m factors into a latitude part (N - m zero circles) and a meridian part
(2m zero lines through the poles), so the nodal set stays connected but the
sphere shatters into 2m(N - m + 1) domains with 2m(N - m) + 2 singular
points, and the gradient margin along the nodal set collapses under grid
refinement instead of staying bounded below.
"""

import numpy as np

from nodallab import fixed_point_vanishing_check, sphere_harmonic_field, sphere_nodal_counts
from nodallab.reports import svg_sphere_map, write_svg_atomic

print(f"{'N':>2} {'m':>2} | {'comp':>4} {'domains':>7} {'oracle':>6} "
      f"{'singular':>8} {'oracle':>6} | {'N*m':>4} match")
for N in range(1, 7):
    for m in range(1, N + 1):
        r = sphere_nodal_counts(N, m)
        flag = "yes" if r.nm_rule_matches else "NO"
        print(f"{N:>2} {m:>2} | {r.component_count:>4} {r.domain_count:>7} "
              f"{r.predicted_domains:>6} {r.singular_point_count:>8} "
              f"{r.predicted_singular_points:>6} | {N * m:>4} {flag:>5}")

print()
print("=== gradient margin collapses under refinement (singular nodal sets) ===")
for N, m in [(2, 2), (4, 2), (3, 3)]:
    r1 = sphere_nodal_counts(N, m)
    r4 = sphere_nodal_counts(N, m, n_phi=4 * (r1.n_phi - 1) + 1, n_theta=4 * r1.n_theta)
    rate = np.sqrt(r4.margin / r1.margin)
    print(f"(N={N}, m={m}): margin {r1.margin:.4f} -> {r4.margin:.4f} over two "
          f"doublings, {rate:.2f} per doubling")
r1 = sphere_nodal_counts(1, 1)
r4 = sphere_nodal_counts(1, 1, n_phi=4 * (r1.n_phi - 1) + 1, n_theta=4 * r1.n_theta)
print(f"(N=1, m=1): margin {r1.margin:.4f} -> {r4.margin:.4f}  <- Re Y_1^1 is the"
      " coordinate x, its nodal set is regular, the margin stays put")

print()
print("=== the fixed points ===")
for N, m in [(3, 2), (4, 3), (2, 1)]:
    rep = fixed_point_vanishing_check(N, m)
    print(f"(N={N}, m={m}): pole value {rep['north_value']:.1e}, "
          f"central-difference gradient {rep['north_gradient_estimate']:.2e}")
print("(for m = 1 the poles are zeros but not critical points of the real part)")

print()
print("writing equirectangular sign map of Re Y_4^2 to sphere_Y42.svg")
har = sphere_harmonic_field(4, 2, 129, 66)
write_svg_atomic("sphere_Y42.svg", svg_sphere_map(har.values, "Re Y_4^2"))
