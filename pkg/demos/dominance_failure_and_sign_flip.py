"""When salvage is impossible: omega = x - 1 on [0, 3] with g' = x.

Values of g' in [0, 1) are only reached where omega < 0, so the negative
mass has nothing to cancel against and dominance fails bin by bin.  A
positive marginal effect with a bump inside [0, 1) then turns the
estimand negative.
"""

import numpy as np

from salvage import IntervalSet, find_sign_flip, parse, partition_signs, salvage_dominance

omega, g_prime = parse("x - 1"), parse("x")
X = IntervalSet.of(0, 3)
part = partition_signs(omega, X, g_prime)
rep = salvage_dominance(omega, g_prime, part, 32)
print("verdict:", rep.verdict, "violated bins:", rep.violated_bins)
for k in rep.violated_bins[:3]:
    m = rep.measures[k]
    print(f"  {m.bin}: mu- {m.mu_minus:.5f} > mu+ {m.mu_plus:.5f}")

flip = find_sign_flip(omega, part, eps=0.01)
print("bump:", flip.spec.to_json())
print("min of g' on a grid:", flip.g_prime(np.linspace(0, 3, 3001)).min())
print("estimand under the bump:", flip.achieved_beta.value)

nonneg = parse("phi(x)")
print(find_sign_flip(nonneg, partition_signs(nonneg, IntervalSet.of(-6, 6))))
