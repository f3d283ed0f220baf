"""When the band is thin, the triangular shape washes out.

With b_n = ceil(sqrt(n)) the ratio n / (2 b_n) diverges and the eigenvalues of
A A^T settle on the quarter-circle law with variance w^2 = 1.
"""

import numpy as np

from bandspec import ExperimentConfig, QuarterCircleLaw, run_compare
from bandspec.harness import limiting_nu

print("limiting nu for ceil(sqrt(n)):", limiting_nu("ceil(sqrt(n))"))
print("limiting nu for n:", limiting_nu("n"))

qc = QuarterCircleLaw(1.0)
print("quarter circle support:", qc.support, " moments:", [qc.moment(k) for k in (1, 2, 3)])

for schedule in ("ceil(sqrt(n))", "n"):
    report = run_compare(ExperimentConfig(kind="compare", n=(200, 800), band_width=schedule, replicas=4, seed=7, reference="quarter_circle"))
    print(f"\nb_n = {schedule}, reference {report.reference}")
    for row in report.rows:
        print(f"  n={row['n']}  b={row['band_width']}  ks={row['ks']:.4f}")

# Thin bands match the quarter circle, full triangles do not: the second
# moment of the triangular law is 2/3, the quarter circle has 2.
print("\nquarter circle density at a few points:", np.round(qc.pdf(np.array([0.5, 1.0, 2.0, 3.5])), 4))
