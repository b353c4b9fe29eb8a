# # Block operators
#
# If the matrix splits as [[A, 0], [0, B]] the first k0 - 1 coordinates and
# the rest evolve independently. The head is an ordinary finite-dimensional
# system, the tail a re-indexed infinite one.

# %%
from volterra import SimplexPoint, VolterraOperator, apply, decompose_tilde, make_random, make_tilde

A = [[0.0, 0.8, -0.4], [-0.8, 0.0, 0.6], [0.4, -0.6, 0.0]]
V = VolterraOperator(make_tilde(A, make_random(5, 0.1, 1.0)))
print(V.class_hint)

x0 = SimplexPoint.uniform(1, 8)
split = decompose_tilde(V, x0)
print(f"k0={split.k0}  head mass {split.r1}  tail mass {split.r2}")

# %%
y, z, x = split.y0, split.z0, x0
for _ in range(200):
    y, z, x = apply(split.head, y), apply(split.tail, z), apply(V, x)
print("identical after 200 steps:", split.join(y, z) == x)
print("head block after 200 steps:", y)
print("tail block after 200 steps:", z)
