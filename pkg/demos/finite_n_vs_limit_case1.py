# Outposts beyond the droplet: the exact finite-n occupation law of the two
# outpost annuli against its n -> infinity Heine limit. The total-variation
# gap halves with each doubling of n.

import itertools

import numpy as np

import heinegas as hg
from heinegas.engine import exact_count_law, joint_mgf, standard_regions
from heinegas.limits import case1

pot = hg.build_case1((1.5, 2.0), w=(0.2, 0.2))
data = hg.droplet_data(pot)
lim = case1(data, pot)

print("limit parameters:")
for k in range(lim.m):
    print(
        f"  outpost {k}: intensity {lim.vartheta[k]:.6f}, "
        f"radius ratio {lim.rho[k]:.6f}"
    )

predicted = hg.pmf_table(lim.heine, tail_tol=1e-12)
s_grid = [np.array(p) for p in itertools.product((-1.0, 0.0, 1.0), repeat=2)]

print("\n    n    tv gap    worst MGF error")
for n in (32, 64, 128, 256):
    regions, _ = standard_regions(data, n=n)
    law = exact_count_law(pot, n, regions)
    tv = hg.tv_distance(law, predicted)[1]
    mgf_err = max(
        abs(joint_mgf(pot, n, s, regions).value - hg.mgf(lim.heine, s))
        / hg.mgf(lim.heine, s)
        for s in s_grid
    )
    print(f"  {n:5d}   {tv:.5f}   {mgf_err:.5f}")

print("\nlimit law mass at the smallest count vectors:")
for alpha in ((0, 0), (1, 0), (0, 1), (1, 1)):
    print(f"  P(N={alpha}) = {predicted.pmf(alpha):.6f}")
