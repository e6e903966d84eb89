"""Fitting the offspring intensity to observed decomposition sizes.

Input is a histogram of decomposition sizes: how many business functions
were split into 2, 3, ... parts.  ``fit_lambda`` gives the sample mean with
a Student-t interval; ``poisson_gof`` runs a Pearson chi-square test of the
Poisson hypothesis with expected-count pooling.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from scipy import stats as _st

from .errors import DegenerateSampleError, InsufficientDataError, ParseError
from .model import poisson_pmf
from .special import chi2_sf

MIN_EXPECTED = 5.0
BUNDLED_PROJECTS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class SampleHistogram:
    counts: dict          # size -> frequency, sizes ascending, no zero frequencies
    source: str | None = None

    @property
    def n(self) -> int:
        return sum(self.counts.values())

    @property
    def total_elements(self) -> int:
        return sum(k * v for k, v in self.counts.items())

    @property
    def mean(self) -> float:
        return self.total_elements / self.n

    @classmethod
    def from_counts(cls, counts, source=None, allow_zero=False):
        """Validated histogram from a mapping or (size, count) pairs.

        Observed decompositions have at least one part, so size 0 is refused
        unless ``allow_zero`` is set (useful for raw Poisson samples).
        """
        merged = {}
        for size, freq in counts.items() if hasattr(counts, "items") else counts:
            size, freq = int(size), int(freq)
            if size < (0 if allow_zero else 1):
                raise ParseError(f"decomposition size must be positive, got {size}", source=source)
            if freq < 0:
                raise ParseError(f"negative count {freq} for size {size}", source=source)
            merged[size] = merged.get(size, 0) + freq
        merged = {k: merged[k] for k in sorted(merged) if merged[k] > 0}
        if not merged:
            raise ParseError("histogram is empty", source=source)
        return cls(merged, source)

    @classmethod
    def from_sample(cls, values, source=None, allow_zero=False):
        counts = {}
        for v in values:
            counts[int(v)] = counts.get(int(v), 0) + 1
        return cls.from_counts(counts, source, allow_zero)


def _int(token, what, line, source):
    try:
        value = int(token.strip())
    except ValueError:
        raise ParseError(f"{what} is not an integer: {token.strip()!r}", line, source) from None
    return value


def ingest_histogram(text: str, source: str | None = None) -> SampleHistogram:
    """Parse ``size,count`` CSV (with header) or one positive integer per line."""
    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise ParseError("input is empty", source=source)
    header = [c.strip().lower() for c in lines[0][1].split(",")]
    pairs = []
    if header == ["size", "count"]:
        if len(lines) == 1:
            raise ParseError("no data rows after header", lines[0][0], source)
        reader = csv.reader(io.StringIO("\n".join(ln for _, ln in lines[1:])))
        for (lineno, _), row in zip(lines[1:], reader):
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", lineno, source)
            size = _int(row[0], "size", lineno, source)
            freq = _int(row[1], "count", lineno, source)
            if size < 1:
                raise ParseError(f"size must be positive, got {size}", lineno, source)
            if freq < 0:
                raise ParseError(f"count must be nonnegative, got {freq}", lineno, source)
            pairs.append((size, freq))
    else:
        for lineno, ln in lines:
            size = _int(ln, "size", lineno, source)
            if size < 1:
                raise ParseError(f"size must be positive, got {size}", lineno, source)
            pairs.append((size, 1))
    try:
        return SampleHistogram.from_counts(pairs, source)
    except ParseError as exc:
        raise ParseError("histogram has no positive counts", source=source) from exc


def read_histogram(path) -> SampleHistogram:
    path = Path(path)
    return ingest_histogram(path.read_text(encoding="utf-8"), source=str(path))


def bundled_path(project: int):
    if project not in BUNDLED_PROJECTS:
        raise FileNotFoundError(f"no bundled dataset for project {project}")
    return resources.files("bpdecomp").joinpath("data", f"project{project}.csv")


def bundled_histogram(project: int) -> SampleHistogram:
    path = bundled_path(project)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"bundled dataset missing: {path}") from None
    return ingest_histogram(text, source=f"project{project}.csv")


# -- fitting -------------------------------------------------------------------

@dataclass(frozen=True)
class GofResult:
    statistic: float
    df: int
    p_value: float
    significance: float
    rejected: bool
    bins: tuple           # (low, high) size ranges, high None for an open tail
    observed: tuple
    expected: tuple


@dataclass(frozen=True)
class FitReport:
    lambda_hat: float
    ci_low: float
    ci_high: float
    confidence: float
    n: int
    total_elements: int
    sample_std: float
    gof: GofResult | None = None


def fit_lambda(hist: SampleHistogram, confidence: float = 0.95) -> FitReport:
    """Sample mean with a Student-t confidence interval."""
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    n = hist.n
    if n < 2:
        raise DegenerateSampleError("need at least two decompositions to estimate a variance")
    mean = hist.total_elements / n
    ss = sum(f * (k - mean) ** 2 for k, f in hist.counts.items())
    sd = math.sqrt(ss / (n - 1))
    half = float(_st.t.ppf((1 + confidence) / 2, n - 1)) * sd / math.sqrt(n)
    return FitReport(lambda_hat=mean, ci_low=mean - half, ci_high=mean + half,
                     confidence=confidence, n=n, total_elements=hist.total_elements,
                     sample_std=sd)


def _pool(lam, hist):
    n = hist.n
    top = max(hist.counts)
    # [low, high, observed, expected]; the last bin is the open tail >= top
    bins = []
    below = 0.0
    for k in range(top):
        p = poisson_pmf(lam, k)
        below += p
        bins.append([k, k, hist.counts.get(k, 0), n * p])
    bins.append([top, None, hist.counts.get(top, 0), n * max(1.0 - below, 0.0)])
    # merge the sparsest cell into its sparser neighbour until all reach the floor;
    # for a unimodal law this pools both tails inward
    while len(bins) > 1:
        i = min(range(len(bins)), key=lambda j: bins[j][3])
        if bins[i][3] >= MIN_EXPECTED:
            break
        if i == 0 or (i + 1 < len(bins) and bins[i + 1][3] < bins[i - 1][3]):
            i += 1
        left, right = bins[i - 1], bins.pop(i)
        bins[i - 1] = [left[0], right[1], left[2] + right[2], left[3] + right[3]]
    return bins


def poisson_gof(hist: SampleHistogram, significance: float = 0.05,
                lam: float | None = None) -> GofResult:
    """Pearson chi-square test of Poisson(lambda_hat); df = bins - 2."""
    lam = hist.mean if lam is None else lam
    bins = _pool(lam, hist)
    if len(bins) < 3:
        raise InsufficientDataError(
            f"only {len(bins)} bins have expected count >= {MIN_EXPECTED:g}; need 3")
    stat = sum((o - e) ** 2 / e for _, _, o, e in bins)
    df = len(bins) - 2
    p = chi2_sf(stat, df)
    return GofResult(statistic=stat, df=df, p_value=p, significance=significance,
                     rejected=p < significance,
                     bins=tuple((lo, hi) for lo, hi, _, _ in bins),
                     observed=tuple(b[2] for b in bins),
                     expected=tuple(b[3] for b in bins))


def fit(hist: SampleHistogram, confidence: float = 0.95, significance: float = 0.05,
        gof: bool = True) -> FitReport:
    """Interval fit plus, when the sample allows it, the goodness-of-fit test."""
    report = fit_lambda(hist, confidence)
    if gof:
        try:
            report = replace(report, gof=poisson_gof(hist, significance))
        except InsufficientDataError:
            pass
    return report


def describe_bins(bins) -> str:
    parts = []
    for lo, hi in bins:
        if hi is None:
            parts.append(f">={lo}")
        elif lo == hi:
            parts.append(str(lo))
        else:
            parts.append(f"{lo}-{hi}")
    return ",".join(parts)


__all__ = [
    "SampleHistogram", "FitReport", "GofResult", "ingest_histogram", "read_histogram",
    "bundled_histogram", "bundled_path", "fit_lambda", "poisson_gof", "fit", "describe_bins",
]
