"""Project effort estimates and figure-curve sweeps built on the model.

An estimate takes a fitted intensity with its confidence interval and
returns the expected horizon, the expected number of model elements at that
horizon, and a band: the expected total at the interval's lower end minus
one standard deviation, up to the expected total at its upper end plus one
standard deviation, all at the horizon of the point estimate.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

from . import model as m
from .errors import ModelInapplicableError
from .stats import FitReport, bundled_histogram, fit

SWEEP_COLUMNS = ("lambda", "k_max", "k_bar", "e_t_fixed", "sd_fixed", "e_t_random",
                 "sd_random", "alpha", "gamma", "k_resource")


@dataclass(frozen=True)
class ProjectEstimate:
    lambda_hat: float
    ci_low: float
    ci_high: float
    k_max: int
    horizon_expected: int
    horizon_range: tuple
    expected_elements: float
    lower_bound: float
    upper_bound: float

    def contains(self, total) -> bool:
        return self.lower_bound <= total <= self.upper_bound

    def rounded(self):
        """Integer (lower, expected, upper), truncated as in the reference table."""
        return (math.floor(self.lower_bound), math.floor(self.expected_elements),
                math.floor(self.upper_bound))


def estimate_interval(lambda_hat: float, ci_low: float, ci_high: float) -> ProjectEstimate:
    """Estimate from a point value and interval endpoints (all must exceed 1)."""
    if not ci_low <= lambda_hat <= ci_high:
        raise ValueError("need ci_low <= lambda_hat <= ci_high")
    if ci_low <= 1.0 + m.LAMBDA_EPS:
        raise ModelInapplicableError(
            f"confidence interval reaches lambda = {ci_low:.4g}; model requires lambda > 1")
    k_bar = m.expected_horizon(lambda_hat)
    _, k_max = m.max_horizon(lambda_hat)
    lo = m.expected_total_fixed(ci_low, k_bar) - math.sqrt(m.variance_total_fixed(ci_low, k_bar))
    hi = m.expected_total_fixed(ci_high, k_bar) + math.sqrt(m.variance_total_fixed(ci_high, k_bar))
    rng = (max(1, k_bar - 1), min(k_max, k_bar + 1))
    return ProjectEstimate(lambda_hat=lambda_hat, ci_low=ci_low, ci_high=ci_high,
                           k_max=k_max, horizon_expected=k_bar, horizon_range=rng,
                           expected_elements=m.expected_total_fixed(lambda_hat, k_bar),
                           lower_bound=lo, upper_bound=hi)


def estimate_project(fit_report: FitReport) -> ProjectEstimate:
    return estimate_interval(fit_report.lambda_hat, fit_report.ci_low, fit_report.ci_high)


# -- bundled datasets ------------------------------------------------------------

@dataclass(frozen=True)
class PrintedRow:
    """One row of the bundled reference table, as printed."""
    project: int
    horizon: int
    lambda_mean: float
    ci_low: float
    ci_high: float
    total_elements: int
    model_lower: int
    model_expected: int
    model_upper: int


def printed_table() -> dict:
    text = resources.files("bpdecomp").joinpath("data/table2.csv").read_text(encoding="utf-8")
    rows = {}
    for r in csv.DictReader(io.StringIO(text)):
        rows[int(r["project"])] = PrintedRow(
            project=int(r["project"]), horizon=int(r["horizon"]),
            lambda_mean=float(r["lambda_mean"]), ci_low=float(r["ci_low"]),
            ci_high=float(r["ci_high"]), total_elements=int(r["total_elements"]),
            model_lower=int(r["model_lower"]), model_expected=int(r["model_expected"]),
            model_upper=int(r["model_upper"]))
    return rows


@dataclass
class VerificationRow:
    project: int
    n: int
    fit: FitReport
    estimate: ProjectEstimate
    observed_total: int
    printed_total: int
    printed: PrintedRow
    reconstruction: ProjectEstimate
    notes: list = field(default_factory=list)

    @property
    def inside(self) -> bool:
        return (self.estimate.contains(self.observed_total)
                and self.estimate.contains(self.printed_total))


def _notes(row: VerificationRow):
    p, f, rec = row.printed, row.fit, row.reconstruction
    notes = []
    if round(f.lambda_hat, 2) != p.lambda_mean:
        notes.append(f"sample mean {f.lambda_hat:.2f} differs from printed mean {p.lambda_mean:g}")
    if row.observed_total != p.total_elements:
        notes.append(f"rows sum to {row.observed_total} elements, printed total is {p.total_elements}")
    lo, mid, hi = rec.rounded()
    for name, got, printed in (("lower bound", lo, p.model_lower),
                               ("expected elements", mid, p.model_expected),
                               ("upper bound", hi, p.model_upper)):
        if got != printed:
            notes.append(f"reconstructed {name} {got} vs printed {printed}")
    return notes


def verify_bundled(confidence: float = 0.95, significance: float = 0.05) -> list:
    """Fit every bundled project and check its observed totals against the band.

    Both the total implied by the histogram rows and the printed total must lie
    inside the band of the fitted estimate.  Each row also carries the
    reconstruction from the printed mean and interval, with notes wherever
    data and print disagree.
    """
    printed = printed_table()
    out = []
    for project in sorted(printed):
        hist = bundled_histogram(project)
        rep = fit(hist, confidence, significance)
        p = printed[project]
        row = VerificationRow(project=project, n=hist.n, fit=rep,
                              estimate=estimate_project(rep),
                              observed_total=hist.total_elements,
                              printed_total=p.total_elements, printed=p,
                              reconstruction=estimate_interval(p.lambda_mean, p.ci_low, p.ci_high))
        row.notes = _notes(row)
        out.append(row)
    return out


def verification_table(rows) -> str:
    head = (f"{'proj':>4} {'n':>3} {'mean':>6} {'ci_low':>7} {'ci_high':>7} {'total':>6} "
            f"{'horizon':>7} {'lower':>7} {'expected':>8} {'upper':>7}  verdict")
    lines = [head, "-" * len(head)]
    for r in rows:
        e = r.estimate
        total = (str(r.observed_total) if r.observed_total == r.printed_total
                 else f"{r.observed_total}/{r.printed_total}")
        lines.append(
            f"{r.project:>4} {r.n:>3} {r.fit.lambda_hat:>6.2f} {r.fit.ci_low:>7.2f} "
            f"{r.fit.ci_high:>7.2f} {total:>6} {e.horizon_range[0]:>3}-{e.horizon_range[1]:<3} "
            f"{e.lower_bound:>7.1f} {e.expected_elements:>8.1f} {e.upper_bound:>7.1f}  "
            f"{'inside band' if r.inside else 'OUTSIDE band'}")
    lines.append("")
    lines.append("reconstruction from printed mean and interval:")
    for r in rows:
        lo, mid, hi = r.reconstruction.rounded()
        p = r.printed
        lines.append(f"  project {r.project}: {lo}/{mid}/{hi} "
                     f"(printed {p.model_lower}/{p.model_expected}/{p.model_upper})")
    notes = [(r.project, n) for r in rows for n in r.notes]
    if notes:
        lines.append("")
        lines.append("discrepancies:")
        lines.extend(f"  project {p}: {n}" for p, n in notes)
    return "\n".join(lines) + "\n"


def verification_json(rows) -> str:
    payload = []
    for r in rows:
        payload.append({
            "project": r.project,
            "n": r.n,
            "lambda_hat": r.fit.lambda_hat,
            "ci_low": r.fit.ci_low,
            "ci_high": r.fit.ci_high,
            "observed_total": r.observed_total,
            "printed_total": r.printed_total,
            "estimate": _estimate_dict(r.estimate),
            "reconstruction": _estimate_dict(r.reconstruction),
            "inside": r.inside,
            "notes": r.notes,
        })
    return dumps(payload)


def _estimate_dict(e: ProjectEstimate):
    d = asdict(e)
    d["horizon_range"] = list(e.horizon_range)
    return d


def _fmt_float(x):
    return float(f"{x:.15g}")


def dumps(obj) -> str:
    """JSON with floats rounded to 15 significant digits, keys in fixed order."""
    def conv(o):
        if isinstance(o, float):
            return _fmt_float(o)
        if isinstance(o, dict):
            return {k: conv(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [conv(v) for v in o]
        return o
    return json.dumps(conv(obj), indent=2)


# -- sweeps --------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    lam: float
    k_max: int
    k_bar: int
    e_t_fixed: float
    sd_fixed: float
    e_t_random: float
    sd_random: float
    alpha: float
    gamma: float
    k_resource: int

    def as_tuple(self):
        return (self.lam, self.k_max, self.k_bar, self.e_t_fixed, self.sd_fixed,
                self.e_t_random, self.sd_random, self.alpha, self.gamma, self.k_resource)


def sweep_point(lam: float, t_budget: float = 1000) -> SweepRow:
    prof = m.extinction_probability(lam)
    tot = m.totals_random_horizon(lam)
    return SweepRow(lam=lam, k_max=prof.k_max, k_bar=tot.n_fixed,
                    e_t_fixed=tot.mean_fixed, sd_fixed=tot.sd_fixed,
                    e_t_random=tot.mean_random, sd_random=tot.sd_random,
                    alpha=prof.alpha, gamma=prof.gamma,
                    k_resource=m.resource_limited_depth(lam, t_budget))


def sweep_grid(lambda_min: float, lambda_max: float, step: float) -> list:
    if not (step > 0 and lambda_min < lambda_max):
        raise ValueError("need lambda_min < lambda_max and step > 0")
    m.check_supercritical(lambda_min)
    count = math.floor((lambda_max - lambda_min) / step + 1e-9) + 1
    return [round(lambda_min + i * step, 12) for i in range(count)]


def sweep(lambda_min: float, lambda_max: float, step: float, t_budget: float = 1000) -> list:
    """One row per grid point, ascending; each row is an independent evaluation."""
    return [sweep_point(lam, t_budget) for lam in sweep_grid(lambda_min, lambda_max, step)]


def transitions(rows, column: str) -> list:
    """(lambda_before, lambda_after, old, new) wherever ``column`` changes."""
    out = []
    for a, b in zip(rows, rows[1:]):
        va, vb = getattr(a, column), getattr(b, column)
        if va != vb:
            out.append((a.lam, b.lam, va, vb))
    return out


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in r.as_tuple()])
    return buf.getvalue()
