"""Evaluation harness: leave-one-patient-out top-n / majority-n accuracy,
confusion matrices, correlation, and the trend test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from bobsearch.errors import (
    DegenerateSequence,
    DivisionError,
    EmptyCatalog,
    UndefinedCorrelation,
)
from bobsearch.index import HORIZONTAL, VERTICAL, Index, SearchHit, rank_candidates
from bobsearch.corpus import SectionType

TOP_NS = (3, 5, 10)
MAJORITY_NS = (3, 5, 7, 10, 15, 20)


@dataclass
class QueryResult:
    query_slide_id: str
    true_label: str
    patient_id: str
    hits: list  # SearchHit, ascending distance


@dataclass
class LabelRow:
    label: str
    wsi_count: int
    patient_count: int
    top_acc: dict = field(default_factory=dict)  # n -> percent
    majority_acc: dict = field(default_factory=dict)  # n -> percent


@dataclass
class EvalReport:
    scope: str
    section: str
    top_ns: tuple
    majority_ns: tuple
    rows: list  # LabelRow sorted by label
    correlation: float | None
    trend_p: float | None
    results: list  # QueryResult


def top_n_success(result: QueryResult, n: int) -> bool:
    """True iff any of the first n hits carries the true label."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return any(h.subtype_code == result.true_label for h in result.hits[:n])


def majority_vote(result: QueryResult, n: int):
    """Label winning a plurality over the first n hits, or None (abstain)
    when there are no hits.

    Ties go to the smallest summed distance among the tied labels, then to
    the label appearing earliest in the ranking.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    top = result.hits[:n]
    if not top:
        return None
    counts: dict[str, int] = {}
    dist_sum: dict[str, float] = {}
    first_rank: dict[str, int] = {}
    for rank, hit in enumerate(top):
        label = hit.subtype_code
        counts[label] = counts.get(label, 0) + 1
        dist_sum[label] = dist_sum.get(label, 0.0) + hit.distance
        first_rank.setdefault(label, rank)
    return min(counts, key=lambda l: (-counts[l], dist_sum[l], first_rank[l]))


def _filter_entries(index: Index, section: str):
    if section == "all":
        return list(index.entries)
    wanted = SectionType(section)
    return [e for e in index.entries if e.section_type == wanted]


def run_queries(index: Index, scope: str = HORIZONTAL, section: str = "all", n_max: int = 20) -> list[QueryResult]:
    """Leave-one-patient-out search for every eligible slide.

    Queries and candidates are both restricted to the section filter.
    Under vertical scope, only sites with at least two subtypes among the
    filtered slides are evaluated.
    """
    entries = _filter_entries(index, section)
    if not entries:
        raise EmptyCatalog(f"no slides match section filter {section!r}")

    if scope == VERTICAL:
        subtypes_per_site: dict[str, set] = {}
        for e in entries:
            subtypes_per_site.setdefault(e.anatomic_site, set()).add(e.subtype_code)
        eligible_sites = {s for s, subs in subtypes_per_site.items() if len(subs) >= 2}
        queries = [e for e in entries if e.anatomic_site in eligible_sites]
    elif scope == HORIZONTAL:
        queries = entries
    else:
        raise ValueError(f"unknown scope {scope!r}")

    by_site: dict[str, list] = {}
    for e in entries:
        by_site.setdefault(e.anatomic_site, []).append(e)

    results = []
    for q in queries:
        pool = by_site[q.anatomic_site] if scope == VERTICAL else entries
        candidates = [e for e in pool if e.patient_id != q.patient_id]
        hits = rank_candidates(q.bunch, candidates, n_max)
        for h in hits:
            # leave-one-patient-out is a hard guarantee, not a convention
            assert h.patient_id != q.patient_id
        results.append(
            QueryResult(
                query_slide_id=q.slide_id,
                true_label=q.subtype_code,
                patient_id=q.patient_id,
                hits=hits,
            )
        )
    return results


def evaluate(
    index: Index,
    scope: str = HORIZONTAL,
    section: str = "all",
    top_ns: tuple = TOP_NS,
    majority_ns: tuple = MAJORITY_NS,
) -> EvalReport:
    """Full evaluation run producing per-label accuracy rows plus the
    patient-count correlation and trend-test p-value."""
    n_max = max((*top_ns, *majority_ns))
    results = run_queries(index, scope=scope, section=section, n_max=n_max)

    per_label: dict[str, list[QueryResult]] = {}
    patients: dict[str, set] = {}
    for r in results:
        per_label.setdefault(r.true_label, []).append(r)
        patients.setdefault(r.true_label, set()).add(r.patient_id)

    rows = []
    for label in sorted(per_label):
        group = per_label[label]
        row = LabelRow(label=label, wsi_count=len(group), patient_count=len(patients[label]))
        for n in top_ns:
            row.top_acc[n] = 100.0 * sum(top_n_success(r, n) for r in group) / len(group)
        for n in majority_ns:
            correct = sum(majority_vote(r, n) == r.true_label for r in group)
            row.majority_acc[n] = 100.0 * correct / len(group)
        rows.append(row)

    correlation = None
    trend_p = None
    if len(rows) >= 2:
        counts = [row.patient_count for row in rows]
        best = [max(row.majority_acc.values()) for row in rows]
        try:
            correlation = pearson(counts, best)
        except UndefinedCorrelation:
            pass
        ordered = [b for _, b in sorted(zip(counts, best), key=lambda cb: (cb[0], cb[1]))]
        try:
            # increasing trend is the null hypothesis; large p keeps it
            trend_p = cox_stuart(ordered, alternative="decreasing")
        except DegenerateSequence:
            pass

    return EvalReport(
        scope=scope,
        section=section,
        top_ns=tuple(top_ns),
        majority_ns=tuple(majority_ns),
        rows=rows,
        correlation=correlation,
        trend_p=trend_p,
        results=results,
    )


def label_universe(results) -> list[str]:
    labels = {r.true_label for r in results}
    for r in results:
        labels.update(h.subtype_code for h in r.hits)
    return sorted(labels)


def confusion_frequency(results, n: int = 10, labels: list[str] | None = None):
    """M[i][j] = occurrences of label j within the top-n hits of queries
    whose true label is i. Returns (labels, matrix)."""
    results = list(results)
    if not results:
        raise EmptyCatalog("no query results")
    if labels is None:
        labels = label_universe(results)
    pos = {label: i for i, label in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for r in results:
        i = pos[r.true_label]
        for h in r.hits[:n]:
            m[i, pos[h.subtype_code]] += 1
    return labels, m


def rescale_heatmap(matrix: np.ndarray, slide_counts, labels: list[str]) -> np.ndarray:
    """Prevalence correction: divide each column by the retrieved subtype's
    slide count."""
    divisors = np.array([slide_counts.get(label, 0) for label in labels], dtype=np.float64)
    zero = [label for label, d in zip(labels, divisors) if d <= 0]
    if zero:
        raise DivisionError(f"zero slide count for label(s): {', '.join(zero)}")
    return np.asarray(matrix, dtype=np.float64) / divisors[None, :]


def chord_matrix(results, n: int = 10, labels: list[str] | None = None):
    """Confusion frequencies with the diagonal zeroed, unthresholded."""
    labels, m = confusion_frequency(results, n=n, labels=labels)
    m = m.copy()
    np.fill_diagonal(m, 0)
    return labels, m


def pearson(x, y) -> float:
    """Product-moment correlation."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("pearson needs two equal-length vectors of size >= 2")
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float((xd * xd).sum()) * float((yd * yd).sum()))
    if denom == 0.0:
        raise UndefinedCorrelation("correlation undefined for constant input")
    r = float((xd * yd).sum()) / denom
    return max(-1.0, min(1.0, r))


def cox_stuart(values, alternative: str = "increasing") -> float:
    """Sign test for monotone trend.

    Pairs x_i with x_{i+c}, c = ceil(N/2) (middle element dropped for odd
    N), discards ties, and returns the exact one-sided binomial tail for
    the chosen alternative.
    """
    values = list(values)
    n = len(values)
    c = (n + 1) // 2
    diffs = [values[i + c] - values[i] for i in range(n - c)]
    signs = [d for d in diffs if d != 0]
    m = len(signs)
    if m == 0:
        raise DegenerateSequence("all trend pairs are tied")
    if alternative == "increasing":
        s = sum(d > 0 for d in signs)
    elif alternative == "decreasing":
        s = sum(d < 0 for d in signs)
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    tail = sum(math.comb(m, k) for k in range(s, m + 1))
    return tail / 2.0**m


def report_table(report: EvalReport) -> str:
    """Delimited accuracy table: one row per label, columns mirroring the
    top-n and majority-n summary layout."""
    header = ["label", "wsi_count", "patient_count"]
    header += [f"top_{n}" for n in report.top_ns]
    header += [f"majority_{n}" for n in report.majority_ns]
    lines = [",".join(header)]
    for row in report.rows:
        cells = [row.label, str(row.wsi_count), str(row.patient_count)]
        cells += [f"{row.top_acc[n]:.2f}" for n in report.top_ns]
        cells += [f"{row.majority_acc[n]:.2f}" for n in report.majority_ns]
        lines.append(",".join(cells))
    corr = "NA" if report.correlation is None else f"{report.correlation:.4f}"
    trend = "NA" if report.trend_p is None else f"{report.trend_p:.6g}"
    lines.append(f"# correlation,{corr}")
    lines.append(f"# trend_p,{trend}")
    return "\n".join(lines) + "\n"


def matrix_table(labels: list[str], matrix: np.ndarray) -> str:
    """Delimited numeric grid with a label header row and column."""
    matrix = np.asarray(matrix)
    lines = [",".join(["label", *labels])]
    for label, row in zip(labels, matrix):
        cells = [f"{v:.6g}" if isinstance(v, float) or matrix.dtype.kind == "f" else str(int(v)) for v in row]
        lines.append(",".join([label, *cells]))
    return "\n".join(lines) + "\n"
