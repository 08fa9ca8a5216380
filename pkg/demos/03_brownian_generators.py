# Seeded Brownian paths: the Euler scheme and the truncated Kac-Siegert series.

# %%
import numpy as np

from ifsm_bm import GaussianStream, KacSiegertBasis, euler_bm, kac_siegert_bm, truncated_variance_at_one
from ifsm_bm.pipeline import diagnostics

# %%
stream = GaussianStream(42)
print("first draws:", stream.normal(3))

# %%
stream = GaussianStream(1)
b1 = np.array([euler_bm(50, 1024, stream).values[-1] for _ in range(2000)])
print("Euler Var B(1) ~", b1.var(ddof=1))

# %%
basis = KacSiegertBasis(25, 1024)
stream = GaussianStream(2)
b1 = np.array([kac_siegert_bm(25, 1024, stream, basis).values[-1] for _ in range(2000)])
print("Kac-Siegert Var B(1) ~", b1.var(ddof=1), " exact", truncated_variance_at_one(25))

# %%
# Realized QV is close to 1 at the knot mesh 1/64; below it the path is linear and QV shrinks.
d = diagnostics(euler_bm(64, 1024, GaussianStream(5)))
for mesh, qv in zip(d.mesh, d.quadratic_variation):
    print(f"mesh {mesh:.5f}  QV {qv:.4f}")
