"""
Monte-Carlo check of the closed forms
=====================================

Every replicate owns a counter-based random stream, so studies are
reproducible and independent of how they are split across workers.
"""
from bpdecomp import model, simulator

lam = 2.0

# one decomposition tree, grown to depth 4
tree = simulator.simulate_tree(lam, seed=42, depth_cap=4)
print("nodes per level:", tree.level_counts())
print(simulator.export_tree(tree, "dot")[:200], "...")

# a study of 200k replicates truncated at depth 2
s = simulator.run_study(lam, 200_000, depth_cap=2, master_seed=1)
alpha = model.extinction_probability(lam).alpha
print(f"extinction  {s.extinction_frequency:.4f} +- {s.extinction_se:.4f}  (alpha {alpha:.4f})")
print(f"mean T(2)   {s.mean_truncated_total:.3f}  (exact {model.expected_total_fixed(lam, 2):.3f})")
print(f"var T(2)    {s.var_truncated_total:.3f}  (exact {model.variance_total_fixed(lam, 2):.3f})")
for n in simulator.COND_MASS_LEVELS:
    est, se = s.cond_mass_estimate(n)
    print(f"E[Z(1); Z({n + 1}) = 0] {est:.5f} +- {se:.5f}  "
          f"(exact {model.conditioned_extinction_mass(lam, n):.5f})")

# the same study on three worker processes gives the identical summary
assert simulator.run_study(lam, 200_000, 2, 1, workers=3) == s
