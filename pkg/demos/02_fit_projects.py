"""
Fitting lambda to observed decompositions
=========================================

The five bundled projects list how many functions were split into
2, 3, ... parts.  Fit the intensity and test the Poisson hypothesis.
"""
from bpdecomp import stats

for project in stats.BUNDLED_PROJECTS:
    hist = stats.bundled_histogram(project)
    rep = stats.fit(hist)
    line = (f"project {project}: n={rep.n:3d} total={rep.total_elements:4d} "
            f"lambda={rep.lambda_hat:.3f} CI=[{rep.ci_low:.2f}, {rep.ci_high:.2f}]")
    if rep.gof is None:
        line += "  (too few decompositions for a chi-square test)"
    else:
        g = rep.gof
        line += (f"  chi2={g.statistic:.2f} df={g.df} p={g.p_value:.3f} "
                 f"bins {stats.describe_bins(g.bins)}")
    print(line)

# a histogram can also come from text, e.g. a file with one size per line
hist = stats.ingest_histogram("3\n4\n4\n5\n2\n6\n4\n")
print(stats.fit_lambda(hist))
