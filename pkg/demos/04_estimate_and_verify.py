"""
Project size estimates
======================

Turn a fitted intensity and its interval into an expected number of model
elements with a band, then check the bundled projects against their bands.
"""
from bpdecomp import estimator

# from a point estimate and interval directly
e = estimator.estimate_interval(4.46, 3.97, 4.95)
print(f"horizon {e.horizon_expected} (range {e.horizon_range[0]}-{e.horizon_range[1]}), "
      f"expected {e.expected_elements:.1f}, band [{e.lower_bound:.1f}, {e.upper_bound:.1f}]")

# every bundled project, with the printed table reconstructed alongside
rows = estimator.verify_bundled()
print(estimator.verification_table(rows))
