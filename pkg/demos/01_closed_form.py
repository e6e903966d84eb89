"""
Closed-form predictions for one intensity
==========================================

Extinction probability, horizon law and expected element counts for a
process where every function splits into Poisson(lam) parts.
"""
from bpdecomp import OffspringModel

m = OffspringModel(5.41)

# extinction probability alpha solves f(alpha) = alpha
prof = m.profile()
print(f"alpha = {prof.alpha:.6f}, level of detail gamma = {prof.gamma:.6f}")
print(f"continuous horizon bound g = {prof.g_lambda:.4f}, so K = {prof.k_max}")

# the horizon G is triangular on 0..K+1; its mean, rounded up, is K-bar
h = m.horizon()
for n, p in enumerate(h.exact):
    print(f"  P(G = {n}) = {p}")
print("K-bar =", h.k_bar)

# element counts at the fixed horizon K-bar and at the random horizon G
t = m.totals()
print(f"E[T({t.n_fixed})] = {t.mean_fixed:.1f} +- {t.sd_fixed:.1f}")
print(f"E[T(G)]   = {t.mean_random:.1f} +- {t.sd_random:.1f}")
