"""A small coverage study on two shipped test signals.

Oracle mode uses the true change points with half-spacing bandwidths;
detected mode runs multiscale detection and matches estimates to the truth
first.  Increase ``REPLICATIONS`` for tighter Monte Carlo error.
"""

import numpy as np

from mosumci import BootstrapConfig, ExperimentConfig, evaluate_coverage, load_signal

REPLICATIONS = 100

for name, mode in [("teeth10", "oracle"), ("mix", "oracle"), ("mix", "detected")]:
    cfg = ExperimentConfig(
        load_signal(name),
        mode=mode,
        replications=REPLICATIONS,
        bootstrap=BootstrapConfig(300, master_seed=2024, alphas=(0.2, 0.1, 0.05)),
    )
    rep = evaluate_coverage(cfg)
    print(f"\n{name} ({mode}), {REPLICATIONS} replications")
    for a, level in enumerate(rep.levels):
        pw = rep.pointwise_coverage[a]
        print(f"  {level:.0%}: pointwise {np.nanmin(pw):.2f}-{np.nanmax(pw):.2f}, "
              f"uniform {rep.uniform_coverage[a]:.2f}, coverage1/2 {rep.coverage1[a]:.2f}/{rep.coverage2[a]:.2f}")
    print(f"  exact hits {rep.hit_rate.mean():.2f}, detection {rep.detection_rate.mean():.2f}")
