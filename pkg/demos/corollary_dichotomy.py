"""Periodic profiles give the quarter circle, others do not.

The fixed point collapses to the quarter-circle transform exactly when
v^2 summed over shifts by 2 nu is constant. A flat profile on [-2, 2] at
nu = 1 has that property; the indicator of [0, 1] does not.
"""

from bandspec.harness import run_corollary_test
from bandspec.profile import constant_profile, make_indicator_profile

zs = [2j, 5j, 10j, 0.5 + 1j]
cases = {
    "flat [-2,2], nu=1": (constant_profile(-2.0, 2.0, 1.0), 1.0),
    "1_[0,1], nu=1": (make_indicator_profile(0.0, 1.0), 1.0),
    "1_[0,1], nu=1/2": (make_indicator_profile(0.0, 1.0), 0.5),
}
for label, (profile, nu) in cases.items():
    rep = run_corollary_test(profile, nu, zs)
    print(f"{label:18s} periodic={rep.periodic!s:5s} w2={rep.w2:.3f} sup|f - f_qc|={rep.sup_deviation:.3e} consistent={rep.consistent}")
    if rep.triangular_deviation is not None:
        print(f"{'':18s} distance to the triangular closed form: {rep.triangular_deviation:.2e}")
