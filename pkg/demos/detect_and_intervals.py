"""Detect change points in a noisy step signal and put bootstrap intervals around them.

Run with ``python3 demos/detect_and_intervals.py``.
"""

import numpy as np

from mosumci import (
    BootstrapConfig,
    ChangePointModel,
    bootstrap_confidence_intervals,
    compute_mosum,
    critical_value,
    detect_multiscale,
)

truth = ChangePointModel.from_jumps(600, [120, 200, 420], [1.5, -2.0, 0.8])
rng = np.random.default_rng(3)
x = truth.signal() + rng.standard_normal(truth.n)

# The MOSUM profile peaks near each change; the threshold is sigma_hat(k) * D_n.
prof = compute_mosum(x, 40)
print(f"max |T| at G=40: {np.abs(prof.stats).max():.2f}, D_n = {critical_value(truth.n, 40, 0.1):.2f}")

# Multiscale detection keeps each estimate's own bandwidth for the bootstrap.
est = detect_multiscale(x, [10, 20, 40, 80, 150])
print("true:     ", list(truth.locations))
print("estimated:", est.locations.tolist(), "bandwidths", [b.G for b in est.bandwidths])

res = bootstrap_confidence_intervals(x, est, BootstrapConfig(1000, master_seed=1, alphas=(0.1, 0.05)))
for alpha in (0.1, 0.05):
    print(f"\n{100 * (1 - alpha):.0f}% intervals")
    for j, theta in enumerate(est.locations):
        pw = res.pointwise.interval(j, alpha)
        un = res.uniform.interval(j, alpha)
        print(f"  {theta:4d}  pointwise {pw}  uniform {un}")

print("\njump estimates:", np.round(res.jumps, 2).tolist())
print("local variances:", np.round(res.variances, 2).tolist())
