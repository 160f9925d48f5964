"""Data cycles, their weight rows, and the error-propagation coefficients.

Each cycle defines how generation i's training data splits between fresh
real draws and earlier models' output. The coefficient table folds the
per-generation estimation errors into the final distance bound; an
independent path-expansion oracle cross-checks the recursion.
"""

from sclab.bounds import balanced_coefficients_gamma, coefficients, coefficients_bruteforce
from sclab.mixing import MixtureSchedule

schedules = {
    "full_synthetic": MixtureSchedule.full_synthetic(5),
    "balanced": MixtureSchedule.balanced(5),
    "fixed_ratio 1:3": MixtureSchedule.fixed_ratio(100, 300, 5),
    "real_each_gen 0.5": MixtureSchedule.real_each_gen(0.5, 5),
}

print("weight rows at generation 3 (real share, per-model shares)")
for name, sched in schedules.items():
    alpha, betas = sched.weights_at(3)
    print(f"  {name:18s}: alpha = {alpha:.3f}, betas = {tuple(round(b, 3) for b in betas)}")

print("\ncoefficient tables at i = 5 (recursion vs path expansion)")
for name, sched in schedules.items():
    fast = coefficients(sched, 5).values
    slow = coefficients_bruteforce(sched, 5).values
    gap = max(abs(a - b) for a, b in zip(fast, slow))
    print(f"  {name:18s}: {tuple(round(v, 4) for v in fast)}  oracle gap {gap:.1e}")

print("\nbalanced cycle: exact recursion vs the printed Gamma-ratio form")
for i in (2, 3, 5):
    rec = coefficients(MixtureSchedule.balanced(i), i).values
    gam = balanced_coefficients_gamma(i)
    print(f"  i={i}: recursion {tuple(round(v, 4) for v in rec)}")
    print(f"       gamma form {tuple(round(v, 4) for v in gam)}"
          + ("   <- diverges below entry i-2" if i >= 3 else "   (identical)"))
