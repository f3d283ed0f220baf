"""Eigenvalue counts in a fixed window fluctuate less as n grows.

The variance of the fraction of eigenvalues in [0, 1] is tracked across
sizes. The fitted log-log slope is printed, then the variance ratio
between the largest and smallest sizes.
"""

from bandspec import ExperimentConfig
from bandspec.harness import run_concentration

cfg = ExperimentConfig(kind="concentration", n=(100, 200, 400), replicas=100, seed=12345, interval=(0.0, 1.0))
report = run_concentration(cfg)
for row in report.rows:
    print(f"n={row['n']:4d}  fraction in window={row['count_mean']:.2f}  var={row['count_var']:.3e}")
print("slope of log var against log n:", round(report.summary["slope"], 3), report.summary["slope_flag"])
print("variance ratio, largest n to smallest n:", round(report.summary["variance_ratio"], 3))
