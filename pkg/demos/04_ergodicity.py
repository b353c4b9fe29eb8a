# # Cesaro averages and escaping mass
#
# For a finite-support seed the cascade orbit settles on a vertex, so its
# averages converge in norm. For seeds with growing support the averages on
# any fixed window lose mass, which is the signature of a non-ergodic
# infinite-support point. Only finite truncations can be simulated, so the
# trend across truncations is what gets reported.

# %%
from volterra import (
    ErgodicBudget,
    SimplexPoint,
    VolterraOperator,
    ergodicity_verdict,
    make_constant,
    truncation_sweep,
)

V = VolterraOperator(make_constant(-1))

r = ergodicity_verdict(V, SimplexPoint.uniform(1, 8))
print("finite support:", r.weak_verdict, r.norm_verdict, r.weak_limit)

# %%
r = ergodicity_verdict(V, SimplexPoint.geometric(64), ErgodicBudget(probe_dim=8))
print("geometric seed, window 1..8:", r.norm_verdict, f"mass {r.mass_of_weak_limit:.3g}",
      "(extrapolated)" if r.extrapolated else "")

# %% [markdown]
# Past N = 64 the extra coordinates are below double resolution next to
# the first ones, so N = 128 reproduces the N = 64 averages exactly.

# %%
sweep = truncation_sweep(V, [16, 32, 64, 128], horizon=10_000, probe_dim=8)
for row in sweep.rows:
    print(f"N={row.N:4d}  A_n(1)={row.coords[0]:.6e}  window mass {row.window_mass:.12e}")
print("verdict:", sweep.verdict)
