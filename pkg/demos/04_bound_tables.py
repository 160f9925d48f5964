"""Closed-form distance bounds and the sample-size schedules that control them.

All outputs are up-to-constant (every hidden proportionality constant is
fixed to 1): compare shapes and orderings across configurations, never
absolute values against a measured distance.
"""

from sclab.bounds import (
    BoundInputs,
    alpha_requirement,
    bound_diffusion,
    bound_fixed_ratio,
    bound_kde,
    bound_real_each_gen,
    required_samples_balanced,
    required_samples_quartic,
)
from sclab.mixing import MixtureSchedule

i = 4
inputs = BoundInputs(n=(4096,) * (i + 1), d=1, delta=0.1, s=2)

print(f"diffusion-family bound at i={i}, n=4096 per generation:")
for name, sched in [
    ("full_synthetic", MixtureSchedule.full_synthetic(i)),
    ("balanced", MixtureSchedule.balanced(i)),
    ("fixed_ratio 1:1", MixtureSchedule.fixed_ratio(2048, 2048, i)),
    ("real_each_gen 0.5", MixtureSchedule.real_each_gen(0.5, i)),
]:
    print(f"  {name:18s}: {bound_diffusion(sched, inputs):.4f}"
          f"   (kde family: {bound_kde(sched, inputs):.4f})")

print("\nclosed forms match the generic coefficient sum exactly:")
lhs = bound_fixed_ratio(2048, 2048, i, d=1, delta=0.1)
rhs = bound_diffusion(
    MixtureSchedule.fixed_ratio(2048, 2048, i), BoundInputs(n=(4096,) * (i + 1), d=1, delta=0.1)
)
print(f"  fixed-ratio prefactor form {lhs:.12f} vs generic {rhs:.12f}")
print(f"  real-each-gen factor at alpha=0.5, i=3: "
      f"{bound_real_each_gen(0.5, 3, 4096) / bound_real_each_gen(1 - 1e-12, 3, 4096):.4f}x "
      "the all-real level")

print("\nsample budgets that pin the final distance to order eps:")
print("  fully synthetic, eps=0.5, d=4, i=2 ->", required_samples_quartic(2, 4, 0.5),
      "samples per generation (quartic growth in i)")
print("  balanced, eps=0.5, d=1, i=6 ->", required_samples_balanced(6, 1, 0.5),
      "(front-loaded: early models feed every later mixture)")
print("  real-data share needed in the final generation only:",
      [round(alpha_requirement(i), 3) for i in range(1, 9)])
