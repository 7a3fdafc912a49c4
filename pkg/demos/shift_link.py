"""Salvage through a link function: omega = x - 1 on [0, 3], g' = 2, Q(x) = x + 2.

The negative weights on [0, 1) are carried onto [2, 3) where the marginal
effect is the same, giving nonnegative weights with the same estimand.
"""

import numpy as np

from salvage import check_link, gallery, make_link, partition_signs, transform_weights_link, verify_preservation

spec = gallery("example1")
part = partition_signs(spec.omega, spec.domain, spec.g_prime)
print("X- =", part.x_minus, " X+ =", part.x_plus)

link = make_link(spec.link, part)
report = check_link(spec.omega, spec.g_prime, link, part)
print("conditions:", report.to_json())

w = transform_weights_link(spec.omega, link, part)
for piece in w.pieces:
    print(f"  {str(piece.interval):>8}  {piece.label}")

xs = np.linspace(0, 3, 7)
print("x        ", xs)
print("omega    ", spec.omega(xs))
print("omega~   ", w(xs))

check = verify_preservation(spec.omega, w, spec.g_prime, spec.domain, part)
print(f"beta {check.beta_original.value:.12g} -> {check.beta_transformed.value:.12g}")
print(f"mass {check.mass_original.value:.12g} -> {check.mass_transformed.value:.12g}")
