# # The cascade operator
#
# With a_ki = -1 for every k < i each coordinate loses mass to all later
# ones. Partial sums obey a closed form: sum_{k<=m} (V^n x)_k is the
# initial partial sum raised to the power 2**n.

# %%
import math

from volterra import SimplexPoint, VolterraOperator, cascade_partial_sum_oracle, iterate, make_constant

V = VolterraOperator(make_constant(-1))
x0 = SimplexPoint.uniform(1, 8)
traj = iterate(V, x0, 10)

# %% [markdown]
# Compare simulated partial sums with repeated squaring.

# %%
for n in (1, 3, 5, 7):
    x = traj[n]
    sim = math.fsum(x.values[x.indices <= 7].tolist())
    print(f"n={n:2d}  simulated {sim:.15e}  closed form {cascade_partial_sum_oracle(x0, 7, n):.15e}")

# %% [markdown]
# All the mass ends up on the last occupied coordinate. Coordinates that
# fall below 1e-300 are set to exactly zero and logged as events.

# %%
print(traj.final)
print("flush events:", traj.events)
