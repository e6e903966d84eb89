"""Acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (visible even under capture) and
then asserts the same condition.  Tolerances are fixed here and nowhere else.
"""
import math
from fractions import Fraction

import pytest

from bpdecomp import cli, estimator, model, rng, simulator, stats


@pytest.fixture
def verdict(capsys):
    def report(tag, ok, detail):
        with capsys.disabled():
            print(f"\n[{tag}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return report


def test_c1_expected_horizon_table(verdict):
    want = {**{lam: 3 for lam in (2, 3, 4, 5, 6, 6.5)},
            **{lam: 4 for lam in (7, 8, 9, 10, 10.5)},
            11: 5, 12: 5}
    got = {lam: model.expected_horizon(lam) for lam in want}
    t = estimator.transitions(estimator.sweep(2, 12, 0.005), "k_bar")
    steps = [(old, new) for _, _, old, new in t]
    at = [b for _, b, _, _ in t]
    ok = (got == want and steps == [(3, 4), (4, 5)]
          and 6.60 <= at[0] <= 6.63 and 10.60 <= at[1] <= 10.66)
    verdict("C1", ok, f"K-bar table exact; transitions 3->4 at {at[0]}, 4->5 at {at[1]}")


PRINTED = {
    1: ((5.41, 4.58, 6.24), (61, 194, 412)),
    2: ((4.46, 3.97, 4.95), (38, 114, 214)),
    3: ((3.55, 3.01, 4.09), (15, 61, 138)),
    4: ((5.13, 4.12, 6.14), (43, 167, 394)),
    5: ((3.2, 2.41, 3.99), (7, 47, 130)),
}


def test_c2_table_reconstruction(verdict):
    ok, parts = True, []
    for project, (args, (lo_p, mid_p, hi_p)) in PRINTED.items():
        e = estimator.estimate_interval(*args)
        lo, mid, hi = e.rounded()
        ok &= mid == mid_p and abs(lo - lo_p) <= 1
        if project == 2:
            ok &= abs(e.upper_bound - 225) <= 1
            parts.append(f"p2 upper {e.upper_bound:.1f} (printed {hi_p}, discrepancy reported)")
        else:
            ok &= abs(hi - hi_p) <= 1
        parts.append(f"p{project} {lo}/{mid}/{hi}")
    verdict("C2", ok, "; ".join(parts))


def test_c3_fit_reproduction(verdict):
    r2 = stats.fit(stats.bundled_histogram(2))
    r4 = stats.fit(stats.bundled_histogram(4))
    ok = (abs(r2.lambda_hat - 4.458) <= 0.005
          and abs(r2.ci_low - 3.97) <= 0.02 and abs(r2.ci_high - 4.95) <= 0.02
          and abs(r4.lambda_hat - 5.130) <= 0.005
          and abs(r4.ci_low - 4.12) <= 0.03 and abs(r4.ci_high - 6.14) <= 0.03)
    notes = []
    for row in estimator.verify_bundled():
        if row.project in (1, 3, 5):
            notes.append(f"p{row.project}: mean {row.fit.lambda_hat:.2f} "
                         f"({'; '.join(row.notes) or 'no notes'})")
    verdict("C3", ok, f"p2 {r2.lambda_hat:.4f} [{r2.ci_low:.3f}, {r2.ci_high:.3f}]; "
                      f"p4 {r4.lambda_hat:.4f} [{r4.ci_low:.3f}, {r4.ci_high:.3f}] | " + " | ".join(notes))


def test_c4_verification_claim(verdict, capsys):
    code = cli.main(["verify"])
    out = capsys.readouterr().out
    rows = estimator.verify_bundled()
    totals = sorted({r.printed_total for r in rows} | {r.observed_total for r in rows})
    ok = code == 0 and all(r.inside for r in rows) and out.count("inside band") == 5
    verdict("C4", ok, f"verify exit {code}; totals {totals} all inside their bands")


def test_c5_monte_carlo(verdict):
    ext = simulator.run_study(2.0, 100_000, 1, master_seed=1)
    big = simulator.run_study(2.0, 1_000_000, 2, master_seed=2)
    deep = simulator.run_study(5.41, 1_000_000, 3, master_seed=3)
    cm, cm_se = big.cond_mass_estimate(1)
    eq_var = model.variance_total_fixed(5.41, 3)
    checks = [
        abs(ext.extinction_frequency - 0.203188) < 3 * ext.extinction_se,
        abs(cm - 0.048013) < 3 * cm_se,
        abs(big.mean_truncated_total / 7 - 1) < 0.01,
        abs(big.var_truncated_total / 22 - 1) < 0.05,
        abs(deep.mean_truncated_total / 194.0 - 1) < 0.01,
        abs(deep.var_truncated_total / eq_var - 1) < 0.05,
    ]
    verdict("C5", all(checks),
            f"extinction {ext.extinction_frequency:.5f}+-{ext.extinction_se:.5f}; "
            f"cond mass {cm:.5f}+-{cm_se:.5f}; depth 2 mean {big.mean_truncated_total:.4f} "
            f"var {big.var_truncated_total:.3f}; lambda 5.41 mean {deep.mean_truncated_total:.2f} "
            f"var {deep.var_truncated_total:.0f} vs closed form {eq_var:.0f} "
            f"(exact {model.exact_variance_total_fixed(5.41, 3):.0f})")


def test_c6_horizon_identity(verdict):
    ok = True
    for k in range(1, 31):
        d = model.horizon_distribution(k)
        ok &= sum(d.exact, Fraction(0)) == 1
        ok &= d.k_m == math.ceil((k + 1) / 2)
        ok &= max(d.exact) == d.exact[d.k_m]
        ok &= d.exact[0] == 0 and d.exact[k + 1] == 0
    verdict("C6", ok, "exact sums equal 1, mode at K_m, zero endpoints for K = 1..30")


def _compose(lam, n, s):
    for _ in range(n):
        s = math.exp(lam * (s - 1.0))
    return s


def test_c7_derivative(verdict):
    h, worst = 1e-6, 0.0
    for lam in (2, 5):
        for n in (1, 2, 3):
            for s in (0, 0.25, 0.5, 0.9):
                fd = (_compose(lam, n, s + h) - _compose(lam, n, s - h)) / (2 * h)
                an = model.iterated_pgf_derivative(lam, n, s)
                worst = max(worst, abs(an - fd) / abs(fd))
    verdict("C7", worst < 1e-5, f"max relative gap {worst:.2e} (limit 1e-5)")


def test_c8_resource_formulas(verdict):
    got = (model.resource_limited_depth(2, 1000), model.resource_limited_depth(7, 1000),
           model.resource_limited_depth(10, 1000), model.resource_total(2, 9))
    verdict("C8", got == (9, 4, 3, 1023), f"K(2)={got[0]} K(7)={got[1]} K(10)={got[2]} T(2,9)={got[3]}")


def _poisson_hist(lam, n, seed):
    return stats.SampleHistogram.from_sample(rng.poisson_sample(lam, n, seed), allow_zero=True)


def test_c9_statistical_soundness(verdict):
    lam = 4.5
    cover = sum(r.ci_low <= lam <= r.ci_high
                for r in (stats.fit_lambda(_poisson_hist(lam, 50, 70_000 + s)) for s in range(500))) / 500
    reject = sum(stats.poisson_gof(_poisson_hist(lam, 500, 80_000 + s)).rejected
                 for s in range(200)) / 200
    ok = 0.93 <= cover <= 0.97 and 0.01 <= reject <= 0.10
    verdict("C9", ok, f"CI coverage {cover:.3f} (0.93-0.97); GOF false rejection {reject:.3f} (0.01-0.10)")
