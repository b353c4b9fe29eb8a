# # Where trajectories end up
#
# When every upper entry is strictly positive, the trajectory converges to
# the vertex at the smallest occupied index. When every upper entry is
# strictly negative, it converges to the largest one.

# %%
from volterra import Budget, SimplexPoint, VolterraOperator, estimate_omega, make_random

x0 = SimplexPoint.from_sparse({3: 0.1, 5: 0.4, 9: 0.2, 14: 0.3})

for lo, hi in [(0.05, 1.0), (-1.0, -0.05)]:
    V = VolterraOperator(make_random(seed=3, lo=lo, hi=hi))
    est = estimate_omega(V, x0, "norm", Budget(max_steps=20_000))
    print(f"entries in ({lo}, {hi}]: {V.class_hint}")
    print(f"   verdict {est.verdict} after {est.steps} steps")
    print(f"   l1 below tolerance from step {est.l1_converged_at}, rho from step {est.rho_converged_at}")

# %% [markdown]
# Weak mode watches only the first coordinates. A seed whose mass sits far
# out still yields the same vertex once it enters the probe window.

# %%
V = VolterraOperator(make_random(seed=3, lo=0.05, hi=1.0))
print(estimate_omega(V, x0, "weak").verdict)
