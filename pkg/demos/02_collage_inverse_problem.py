# The collage inverse problem: assemble the quadratic form and solve the QP.

# %%
import numpy as np

from ifsm_bm import (
    FeasibleRegion,
    GaussianStream,
    IfsmSystem,
    assemble,
    collage_distance,
    evaluate_form,
    kac_siegert_bm,
    solve,
    wavelet_family,
)

# %%
v = kac_siegert_bm(25, 256, GaussianStream(3))
maps = wavelet_family(3)
qp = assemble(v, maps)
print("variables:", qp.b.size, " c = ||v||^2 =", qp.c)

# %%
# The form agrees with the directly computed ||v - Tv||^2.
x = np.random.default_rng(1).uniform(-1, 1, qp.b.size)
print(evaluate_form(qp, x), collage_distance(v, IfsmSystem.from_vector(maps, x)))

# %%
region = FeasibleRegion.for_qp(qp, bound=5.0, max_contractivity=0.9)
report = solve(qp, region)
print(f"delta2 = {report.delta2:.3e}, KKT residual {report.kkt_residual:.1e}, converged {report.converged}")
print("contractivity used:", report.contractivity)
