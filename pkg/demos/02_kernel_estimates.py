"""Kernel density estimation: the bandwidth rule, kernel orders, and L1 error.

The bandwidth follows h = n**(-1/(2s+2d)), balancing smoothing bias against
variance for a kernel of order s in d dimensions. Order-2 kernels are
probability densities and support exact resampling; the higher-order
profiles trade nonnegativity for faster bias decay and are measurement-only.
"""

import numpy as np

from sclab.distributions import Gauss1D
from sclab.kernels import KernelSpec, bandwidth, fit, l1_error, verify_kernel_order

print("bandwidth rule: n=4096, s=2, d=1 ->", bandwidth(4096, 2, 1))

print("\nmoment table per kernel (mass, vanishing moments, pass/fail)")
for kern in (
    KernelSpec.gaussian(),
    KernelSpec.epanechnikov(),
    KernelSpec.higher_order_gaussian(4),
    KernelSpec.higher_order_gaussian(6),
):
    rep = verify_kernel_order(kern)
    moments = ", ".join(f"{m:+.1e}" for m in rep.moments)
    print(f"  {kern.profile}(s={kern.order}): [{moments}]"
          f"  |u^s K| = {rep.abs_moment_at_order:.4f}  passed={rep.passed}")

target = Gauss1D(0, 1)
print("\nL1 error vs sample count (Gaussian kernel, median of 5 seeds)")
rng = np.random.default_rng(42)
sizes = [2**k for k in range(8, 15, 2)]
for n in sizes:
    errs = [
        l1_error(fit(target.sample(n, int(s)), KernelSpec.gaussian()), target)
        for s in rng.integers(0, 2**63, size=5)
    ]
    print(f"  n = {n:6d}: median L1 = {np.median(errs):.4f}")

model = fit(target.sample(10_000, 5), KernelSpec.gaussian())
resampled = model.sample(10_000, 11)
print(f"\nexact resampling inflates variance by h^2: measured "
      f"{resampled.points.var():.4f} vs data {model.samples.points.var():.4f} + "
      f"h^2 = {model.samples.points.var() + model.bandwidth**2:.4f}")
