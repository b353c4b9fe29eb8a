# # Linear Lyapunov functionals
#
# phi_b(x) = sum b_k x_k changes by sum_{k<i} x_k x_i a_ki (b_k - b_i) per
# step, so the sign pattern of the matrix and the monotonicity of b decide
# whether phi_b goes up or down along every trajectory.

# %%
import numpy as np

from volterra import (
    SimplexPoint,
    VolterraOperator,
    admissibility,
    iterate,
    make_bm,
    make_bn_harmonic,
    make_increasing,
    make_random,
    monotonicity_report,
)

x0 = SimplexPoint.uniform(1, 6)
plus = make_random(7, 0, 1)
minus = make_random(7, -1, 0)

for label, m in [("plus", plus), ("minus", minus)]:
    t = iterate(VolterraOperator(m), x0, 300)
    for f in (make_bm(2), make_bn_harmonic(4), make_increasing(5)):
        adm = admissibility(f, m, 30)
        rep = monotonicity_report(f, t)
        print(f"{label:5s} {f.name:12s} predicted sign {adm.expected_sign!s:>4}  observed {rep.verdict:13s}"
              f" limit {rep.limit:.6f}")

# %% [markdown]
# Coefficients that tend to zero make phi_b continuous for pointwise
# convergence: phi_b(e_n) is eventually below any tolerance.

# %%
f = make_bm(3)
for eps in (1e-3, 1e-9):
    n = f.c0_rank(eps)
    print(f"|phi(e_k)| < {eps:g} for all k >= {n}; phi(e_{n}) = {f[n]:.3g}")
print(np.round(f.coefficients(np.arange(1, 8)), 4))
