# Wavelet maps, the IFSM operator and its fixed point.
#
# Two level-1 maps with grey maps (1/2, 0) and (1/2, 1/2) reproduce u(t) = t;
# on the cell grid the fixed point is the cell average (j + 1/2)/n.

# %%
import numpy as np

from ifsm_bm import (
    IfsmSystem,
    SampledPath,
    apply_operator,
    contractivity_factor,
    fixed_point,
    l2_distance,
    wavelet_family,
    wavelet_map,
)

# %%
maps = wavelet_family(2)
for w in maps:
    print(f"w(x) = {w.s} x + {w.a}, image {tuple(map(str, w.image))}")

# %%
ident = IfsmSystem.from_pairs([(wavelet_map(1, 1), (0.5, 0.0)), (wavelet_map(1, 2), (0.5, 0.5))])
print("C =", contractivity_factor(ident))
fp, its = fixed_point(ident, n=16, tol=1e-12)
print(f"fixed point after {its} iterations:", np.round(fp.cells, 6))
print("max error vs (j+1/2)/n:", np.abs(fp.cells - (np.arange(16) + 0.5) / 16).max())

# %%
# Contraction: d(Tu, Tv) <= C d(u, v)
rng = np.random.default_rng(0)
u, v = SampledPath(rng.normal(size=65)), SampledPath(rng.normal(size=65))
print(
    "d(Tu,Tv) =", l2_distance(apply_operator(ident, u), apply_operator(ident, v)),
    "<= C d(u,v) =", contractivity_factor(ident) * l2_distance(u, v),
)
