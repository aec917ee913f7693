"""Compare bootstrap deviations with the two limit laws of the estimation error.

Small jumps (local regime): rescaled by the signal-to-noise ratio the
deviations follow the argmax of a two-sided Wiener process with drift
``-|s|/sqrt(6)``.  Large jumps (fixed regime): the raw integer deviations
follow the argmax of a random walk with drift ``-|l| d^2``.
"""

import numpy as np

from mosumci import (
    BootstrapConfig,
    ChangePointModel,
    FixedArgmaxConfig,
    WienerArgmaxConfig,
    distribution_distance,
    oracle_locate,
    run_bootstrap,
    sample_fixed_argmax,
    sample_wiener_argmax,
)
from mosumci.detection import plugin_estimates
from mosumci.limits import quantile_summary

rng = np.random.default_rng(0)

# local regime: n = 10000, d = 0.3
truth = ChangePointModel.from_jumps(10_000, [5000], [0.3])
x = truth.signal() + rng.standard_normal(truth.n)
est = oracle_locate(x, truth, [2000])
devs = run_bootstrap(x, est, BootstrapConfig(2000, 1)).deviations[:, 0]
d, v = plugin_estimates(x, est)
scaled = (d[0] ** 2 / v[0]) * devs
wiener = sample_wiener_argmax(WienerArgmaxConfig(draws=20_000, seed=2))
print("local regime, KS distance:", round(distribution_distance(scaled.astype(float), wiener), 3))
boot_q = quantile_summary(scaled, (0.05, 0.25, 0.5, 0.75, 0.95))
limit_q = quantile_summary(wiener, (0.05, 0.25, 0.5, 0.75, 0.95))
for p in boot_q:
    print(f"  q{p:>5}: bootstrap {boot_q[p]:7.2f}   limit {limit_q[p]:7.2f}")

# fixed regime: n = 2000, d = 2
truth = ChangePointModel.from_jumps(2000, [1000], [2.0])
x = truth.signal() + rng.standard_normal(truth.n)
est = oracle_locate(x, truth, [200])
devs = run_bootstrap(x, est, BootstrapConfig(5000, 3)).deviations[:, 0]
walk = sample_fixed_argmax(FixedArgmaxConfig(2.0, draws=20_000, seed=4))
print("\nfixed regime, TV distance on -5..5:", round(distribution_distance(devs, walk, support=range(-5, 6)), 3))
for ell in range(-3, 4):
    print(f"  P({ell:+d}): bootstrap {np.mean(devs == ell):.3f}   limit {np.mean(walk == ell):.3f}")
