"""Build the three driving-sequence cores and compare their uniformity.

Each Gibbs sweep consumes one row of d uniforms.  The iid core is the
ordinary Monte Carlo driver; the other two fill the N x d array with a
single balanced point set so that consecutive rows keep the chain's
transition kernel but cancel integration error across the run.
"""
import numpy as np

from ubmcqmc.driving import (
    digital_shift,
    harase_matrix,
    iid_matrix,
    liao_matrix,
    star_discrepancy,
)
from ubmcqmc.lfsr import params_for_order

d = 2  # exact star discrepancy is affordable in low dimension
n = 256

rng = np.random.default_rng(7)
iid = iid_matrix(n, d, rng)
liao = digital_shift(liao_matrix(d, n, rng), rng.random(d))
harase = digital_shift(harase_matrix(params_for_order(8), d), rng.random(d))

print(f"core shape: {iid.entries.shape}, all entries in [0, 1)")
for name, core in (("iid", iid), ("liao", liao), ("harase", harase)):
    disc = star_discrepancy(core.entries)
    means = core.entries.mean(axis=0).round(3)
    print(f"{name:7s} star discrepancy {disc:.4f}  column means {means}")

# a digital shift XORs each coordinate's bits, so uniform margins survive
z = np.random.default_rng(1).random(d)
shifted = digital_shift(harase_matrix(params_for_order(8), d), z)
print("\nshifted core min/max:", shifted.entries.min().round(4), shifted.entries.max().round(4))

# doubling N should shrink the balanced discrepancies roughly like 1/N,
# while the iid discrepancy only improves like 1/sqrt(N)
print("\n      N    iid    liao  harase")
for order in (6, 8, 10):
    size = 1 << order
    rng = np.random.default_rng(order)
    row = [
        star_discrepancy(iid_matrix(size, 2, rng).entries),
        star_discrepancy(digital_shift(liao_matrix(2, size, rng), rng.random(2)).entries),
        star_discrepancy(
            digital_shift(harase_matrix(params_for_order(order), 2), rng.random(2)).entries
        ),
    ]
    print(f"  {size:5d}  {row[0]:.4f}  {row[1]:.4f}  {row[2]:.4f}")
