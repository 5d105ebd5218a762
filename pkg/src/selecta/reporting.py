"""Diagnostic tables and robustness checks over a selection run.

Report shapes mirror the committee workflow: quota coverage per discipline
(table 2), per-indicator set sizes (table 3), indicator averages for the
candidate union versus the intersection (table 4), selected-versus-production
distributions by year (table 5) and by sector with a Pearson correlation of
the share vectors (table 6), and a two-institution sector comparison
(table 7). A retrospective audit reports what fraction of a submitted list
sits below the median of a reference portfolio on a chosen metric.

Every report is a pure function of (pools, scores, results); rendered CSVs
round shares to one decimal and indicators to two, while the machine-readable
summary keeps full precision. Within a distribution table the displayed
shares are rounded by largest remainder so each group sums to exactly 100.0.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from math import fsum, sqrt
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Publication
from .metrics import IndicatorScores
from .selector import SelectionResult, largest_remainder
from .taxonomy import UdPool


class ReportingError(Exception):
    pass


@dataclass(frozen=True)
class UdSummaryRow:
    ud_code: int | None  # None marks the totals row
    fte: float
    quota: int
    production_count: int
    quota_share_of_production: float | None  # percent, absent when no production
    candidate_count: int
    candidate_share: float | None  # percent
    candidates_per_quota: float | None  # absent when quota is zero


@dataclass(frozen=True)
class SetSizeRow:
    ud_code: int
    pool_size: int
    k: int
    set_jir: int
    set_air: int
    set_aii: int
    intersection: int
    shortfall: bool


@dataclass(frozen=True)
class MeanTriple:
    n: int
    jir: float | None  # mean over members with a journal ranking
    air: float | None
    aii: float | None


@dataclass(frozen=True)
class AveragesRow:
    ud_code: int
    candidates: MeanTriple
    intersection: MeanTriple


@dataclass(frozen=True)
class DistributionRow:
    key: str  # year or sector code
    selected_count: int
    selected_share: float  # percent, full precision
    production_count: int
    production_share: float


def _share(count: int, total: int) -> float:
    return 100.0 * count / total if total else 0.0


def ud_summary(
    pools: Mapping[int, UdPool],
    quota_plan,
    results: Mapping[int, SelectionResult],
    fte_by_ud: Mapping[int, float],
) -> list[UdSummaryRow]:
    """One row per discipline plus a totals row; shares are against the
    discipline's own production."""
    rows: list[UdSummaryRow] = []
    total_fte = 0.0
    total_quota = 0
    total_production = 0
    total_candidates = 0
    for ud in sorted(quota_plan.per_ud):
        quota = quota_plan.per_ud[ud]
        production = len(pools[ud]) if ud in pools else 0
        candidates = len(results[ud].candidates) if ud in results else 0
        fte = float(fte_by_ud.get(ud, 0.0))
        rows.append(
            UdSummaryRow(
                ud_code=ud,
                fte=fte,
                quota=quota,
                production_count=production,
                quota_share_of_production=_share(quota, production) if production else None,
                candidate_count=candidates,
                candidate_share=_share(candidates, production) if production else None,
                candidates_per_quota=candidates / quota if quota else None,
            )
        )
        total_fte += fte
        total_quota += quota
        total_production += production
        total_candidates += candidates
    rows.append(
        UdSummaryRow(
            ud_code=None,
            fte=total_fte,
            quota=total_quota,
            production_count=total_production,
            quota_share_of_production=(
                _share(total_quota, total_production) if total_production else None
            ),
            candidate_count=total_candidates,
            candidate_share=(
                _share(total_candidates, total_production) if total_production else None
            ),
            candidates_per_quota=total_candidates / total_quota if total_quota else None,
        )
    )
    return rows


def set_size_report(results: Mapping[int, SelectionResult],
                    pools: Mapping[int, UdPool]) -> list[SetSizeRow]:
    """Per-discipline sizes of the three top sets and their intersection;
    tie inclusion shows up as unequal sizes."""
    return [
        SetSizeRow(
            ud_code=ud,
            pool_size=len(pools[ud]) if ud in pools else 0,
            k=r.k,
            set_jir=len(r.set_jir),
            set_air=len(r.set_air),
            set_aii=len(r.set_aii),
            intersection=len(r.intersection),
            shortfall=r.shortfall,
        )
        for ud, r in sorted(results.items())
    ]


def _mean_triple(pub_ids: Iterable[str], scores: Mapping[str, IndicatorScores]) -> MeanTriple:
    members = sorted(pub_ids)
    if not members:
        return MeanTriple(n=0, jir=None, air=None, aii=None)
    jir_values = [scores[p].jir for p in members if scores[p].jir is not None]
    air_values = [scores[p].air for p in members]
    aii_values = [scores[p].aii for p in members]
    return MeanTriple(
        n=len(members),
        jir=fsum(jir_values) / len(jir_values) if jir_values else None,
        air=fsum(air_values) / len(air_values),
        aii=fsum(aii_values) / len(aii_values),
    )


def intersection_averages(
    results: Mapping[int, SelectionResult], scores: Mapping[str, IndicatorScores]
) -> list[AveragesRow]:
    """Mean indicator triples over the candidate union and over the
    intersection, per discipline; empty sets report absent means."""
    return [
        AveragesRow(
            ud_code=ud,
            candidates=_mean_triple(r.candidates, scores),
            intersection=_mean_triple(r.intersection, scores),
        )
        for ud, r in sorted(results.items())
    ]


def _distribution(
    selected: Iterable[str],
    production: Iterable[str],
    key_of: Mapping[str, str],
) -> list[DistributionRow]:
    selected_counts: dict[str, int] = {}
    production_counts: dict[str, int] = {}
    for pub_id in production:
        key = key_of[pub_id]
        production_counts[key] = production_counts.get(key, 0) + 1
    for pub_id in selected:
        key = key_of[pub_id]
        selected_counts[key] = selected_counts.get(key, 0) + 1
    total_selected = sum(selected_counts.values())
    total_production = sum(production_counts.values())
    return [
        DistributionRow(
            key=key,
            selected_count=selected_counts.get(key, 0),
            selected_share=_share(selected_counts.get(key, 0), total_selected),
            production_count=production_counts[key],
            production_share=_share(production_counts[key], total_production),
        )
        for key in sorted(production_counts)
    ]


def year_distribution(
    results: Mapping[int, SelectionResult],
    pools: Mapping[int, UdPool],
    publications: Mapping[str, Publication],
) -> dict[int, list[DistributionRow]]:
    """Selected (candidate) versus production counts and shares per year,
    for each discipline; rows sorted by year."""
    out: dict[int, list[DistributionRow]] = {}
    for ud in sorted(results):
        key_of = {p: str(publications[p].year) for p in pools[ud].pub_ids}
        out[ud] = _distribution(sorted(results[ud].candidates), pools[ud].pub_ids, key_of)
    return out


def sector_distribution(
    results: Mapping[int, SelectionResult],
    pools: Mapping[int, UdPool],
    publications: Mapping[str, Publication],
) -> dict[int, tuple[list[DistributionRow], float | None]]:
    """Per-discipline sector breakdown of selected versus production shares,
    with the Pearson correlation of the two share vectors (absent below two
    sectors or under zero variance). Rows sorted by selected count descending,
    then sector code."""
    out: dict[int, tuple[list[DistributionRow], float | None]] = {}
    for ud in sorted(results):
        key_of = {p: publications[p].sector_code for p in pools[ud].pub_ids}
        rows = _distribution(sorted(results[ud].candidates), pools[ud].pub_ids, key_of)
        rows.sort(key=lambda r: (-r.selected_count, r.key))
        r = pearson(
            [row.selected_share for row in rows],
            [row.production_share for row in rows],
        )
        out[ud] = (rows, r)
    return out


def sector_comparison(
    left: tuple[Mapping[int, SelectionResult], Mapping[int, UdPool]],
    right: tuple[Mapping[int, SelectionResult], Mapping[int, UdPool]],
    publications: Mapping[str, Publication],
) -> dict[int, list[tuple[str, int, float, int, float]]]:
    """Side-by-side selected counts/shares per sector for two institutions
    (rows: sector, left count, left share, right count, right share)."""
    left_dist = sector_distribution(left[0], left[1], publications)
    right_dist = sector_distribution(right[0], right[1], publications)
    out: dict[int, list[tuple[str, int, float, int, float]]] = {}
    for ud in sorted(set(left_dist) | set(right_dist)):
        lrows = {r.key: r for r in left_dist.get(ud, ([], None))[0]}
        rrows = {r.key: r for r in right_dist.get(ud, ([], None))[0]}
        rows = []
        for sector in sorted(set(lrows) | set(rrows)):
            l = lrows.get(sector)
            r = rrows.get(sector)
            rows.append(
                (
                    sector,
                    l.selected_count if l else 0,
                    l.selected_share if l else 0.0,
                    r.selected_count if r else 0,
                    r.selected_share if r else 0.0,
                )
            )
        rows.sort(key=lambda row: (-(row[1] + row[3]), row[0]))
        out[ud] = rows
    return out


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Sample Pearson correlation, clamped to [-1, 1]; None when undefined
    (fewer than two points or zero variance)."""
    if len(xs) != len(ys):
        raise ReportingError("pearson: length mismatch")
    n = len(xs)
    if n < 2:
        return None
    mean_x = fsum(xs) / n
    mean_y = fsum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    sxx = fsum(d * d for d in dx)
    syy = fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    r = fsum(a * b for a, b in zip(dx, dy)) / sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def median(values: Sequence[float]) -> float:
    """Median with the even-size convention of averaging the two central values."""
    if not values:
        raise ReportingError("median of empty sequence")
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def _preview(ids: Sequence[str], limit: int = 5) -> str:
    head = ", ".join(ids[:limit])
    if len(ids) > limit:
        head += f", ... ({len(ids)} total)"
    return head


def median_audit(
    submitted: Iterable[str],
    portfolio: Iterable[str],
    values: Mapping[str, float],
) -> float:
    """Fraction of the submitted set strictly below the portfolio median.

    The retrospective question: how many of the publications actually
    submitted scored below the median of the full portfolio they were drawn
    from? Missing metric values and non-subset submissions are errors.
    """
    submitted_ids = sorted(set(submitted))
    portfolio_ids = sorted(set(portfolio))
    if not submitted_ids:
        raise ReportingError("median_audit: empty submitted set")
    outsiders = sorted(set(submitted_ids) - set(portfolio_ids))
    if outsiders:
        raise ReportingError(
            f"median_audit: submitted not a subset of portfolio: {_preview(outsiders)}")
    missing = [p for p in portfolio_ids if p not in values]
    if missing:
        raise ReportingError(f"median_audit: no metric value for {_preview(missing)}")
    cutoff = median([values[p] for p in portfolio_ids])
    below = sum(1 for p in submitted_ids if values[p] < cutoff)
    return below / len(submitted_ids)


AUDIT_METRICS = ("normalized_if", "jir", "air", "aii")


def audit_metric_values(
    metric: str,
    publications: Mapping[str, Publication],
    scores: Mapping[str, IndicatorScores],
    if_table,
) -> dict[str, float]:
    """Per-publication values for one audit metric; publications lacking the
    metric are simply absent (median_audit reports them if they matter)."""
    from .metrics import publication_normalized_if

    if metric not in AUDIT_METRICS:
        raise ReportingError(f"unknown audit metric {metric!r}, expected one of {AUDIT_METRICS}")
    values: dict[str, float] = {}
    for pub_id, pub in publications.items():
        if metric == "normalized_if":
            v = publication_normalized_if(pub, if_table)
        else:
            v = getattr(scores[pub_id], metric)
        if v is not None:
            values[pub_id] = float(v)
    return values


# --- rendered tables ---------------------------------------------------------

TABLE_NAMES = ("table2", "table3", "table4", "table5", "table6", "table7")


def round_shares(raw: Sequence[float]) -> list[float]:
    """Round a group of percentages to one decimal so they sum to 100.0.

    Uses largest-remainder apportionment of 1000 tenths; a group whose raw
    values are all zero stays all zero.
    """
    weights = {i: Fraction(v) for i, v in enumerate(raw)}
    tenths = largest_remainder(weights, 1000)
    return [tenths[i] / 10.0 for i in range(len(raw))]


def _fmt(value: float | None, decimals: int) -> str:
    return "" if value is None else f"{value:.{decimals}f}"


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_table2(rows: Sequence[UdSummaryRow]) -> str:
    header = ["ud_code", "fte", "quota", "production", "quota_share_pct",
              "candidates", "candidate_share_pct", "candidates_per_quota"]
    out = []
    for r in rows:
        out.append([
            "total" if r.ud_code is None else r.ud_code,
            _fmt(r.fte, 1),
            r.quota,
            r.production_count,
            _fmt(r.quota_share_of_production, 1),
            r.candidate_count,
            _fmt(r.candidate_share, 1),
            _fmt(r.candidates_per_quota, 2),
        ])
    return _csv_text(header, out)


def render_table3(rows: Sequence[SetSizeRow]) -> str:
    header = ["ud_code", "pool_size", "k", "set_jir", "set_air", "set_aii",
              "intersection", "shortfall"]
    return _csv_text(
        header,
        [
            [r.ud_code, r.pool_size, r.k, r.set_jir, r.set_air, r.set_aii,
             r.intersection, 1 if r.shortfall else 0]
            for r in rows
        ],
    )


def render_table4(rows: Sequence[AveragesRow]) -> str:
    header = ["ud_code", "scope", "n", "mean_jir", "mean_air", "mean_aii"]
    out = []
    for r in rows:
        for scope, triple in (("candidates", r.candidates), ("intersection", r.intersection)):
            out.append([
                r.ud_code, scope, triple.n,
                _fmt(triple.jir, 2), _fmt(triple.air, 2), _fmt(triple.aii, 2),
            ])
    return _csv_text(header, out)


def _render_distribution(
    header: Sequence[str],
    groups: Mapping[int, Sequence[DistributionRow]],
    extra: Mapping[int, Sequence[str]] | None = None,
) -> str:
    out = []
    for ud, rows in sorted(groups.items()):
        selected_display = round_shares([r.selected_share for r in rows])
        production_display = round_shares([r.production_share for r in rows])
        for row, s_disp, p_disp in zip(rows, selected_display, production_display):
            line = [ud, row.key, row.selected_count, f"{s_disp:.1f}",
                    row.production_count, f"{p_disp:.1f}"]
            if extra is not None:
                line.extend(extra[ud])
            out.append(line)
    return _csv_text(header, out)


def render_table5(groups: Mapping[int, Sequence[DistributionRow]]) -> str:
    header = ["ud_code", "year", "selected", "selected_share_pct",
              "production", "production_share_pct"]
    return _render_distribution(header, groups)


def render_table6(
    groups: Mapping[int, tuple[Sequence[DistributionRow], float | None]]
) -> str:
    header = ["ud_code", "sector_code", "selected", "selected_share_pct",
              "production", "production_share_pct", "pearson_r"]
    rows_only = {ud: rows for ud, (rows, _) in groups.items()}
    extra = {ud: [_fmt(r, 2)] for ud, (_, r) in groups.items()}
    return _render_distribution(header, rows_only, extra)


def render_table7(
    comparison: Mapping[int, Sequence[tuple[str, int, float, int, float]]]
) -> str:
    header = ["ud_code", "sector_code", "left_selected", "left_share_pct",
              "right_selected", "right_share_pct"]
    out = []
    for ud, rows in sorted(comparison.items()):
        left_display = round_shares([row[2] for row in rows])
        right_display = round_shares([row[4] for row in rows])
        for row, l_disp, r_disp in zip(rows, left_display, right_display):
            out.append([ud, row[0], row[1], f"{l_disp:.1f}", row[3], f"{r_disp:.1f}"])
    return _csv_text(header, out)


def write_report(text: str, path: str | Path) -> None:
    Path(path).write_text(text, encoding="utf-8")


# --- machine-readable summary -------------------------------------------------


def _triple_dict(triple: MeanTriple) -> dict:
    return {"n": triple.n, "jir": triple.jir, "air": triple.air, "aii": triple.aii}


def build_summary(
    quota_plan,
    weights: Sequence[float],
    pools: Mapping[int, UdPool],
    results: Mapping[int, SelectionResult],
    scores: Mapping[str, IndicatorScores],
    publications: Mapping[str, Publication],
    fte_by_ud: Mapping[int, float],
) -> dict:
    """Full-precision summary document consumed by the service and UI."""
    summary_rows = ud_summary(pools, quota_plan, results, fte_by_ud)
    sizes = {r.ud_code: r for r in set_size_report(results, pools)}
    averages = {r.ud_code: r for r in intersection_averages(results, scores)}
    years = year_distribution(results, pools, publications)
    sectors = sector_distribution(results, pools, publications)

    ud_docs = []
    for row in summary_rows:
        if row.ud_code is None:
            continue
        ud = row.ud_code
        size = sizes[ud]
        ud_docs.append({
            "ud_code": ud,
            "fte": row.fte,
            "quota": row.quota,
            "production": row.production_count,
            "quota_share_pct": row.quota_share_of_production,
            "candidates": row.candidate_count,
            "candidate_share_pct": row.candidate_share,
            "candidates_per_quota": row.candidates_per_quota,
            "k": size.k,
            "shortfall": size.shortfall,
            "set_sizes": {"jir": size.set_jir, "air": size.set_air, "aii": size.set_aii},
            "intersection_size": size.intersection,
            "averages": {
                "candidates": _triple_dict(averages[ud].candidates),
                "intersection": _triple_dict(averages[ud].intersection),
            },
            "years": [
                {"year": int(r.key), "selected": r.selected_count,
                 "selected_share_pct": r.selected_share,
                 "production": r.production_count,
                 "production_share_pct": r.production_share}
                for r in years[ud]
            ],
            "sectors": [
                {"sector_code": r.key, "selected": r.selected_count,
                 "selected_share_pct": r.selected_share,
                 "production": r.production_count,
                 "production_share_pct": r.production_share}
                for r in sectors[ud][0]
            ],
            "pearson_r": sectors[ud][1],
        })
    totals = summary_rows[-1]
    return {
        "institution_id": quota_plan.institution_id,
        "ratio": quota_plan.ratio,
        "global_quota": quota_plan.global_quota,
        "weights": list(weights),
        "ud": ud_docs,
        "totals": {
            "fte": totals.fte,
            "quota": totals.quota,
            "production": totals.production_count,
            "quota_share_pct": totals.quota_share_of_production,
            "candidates": totals.candidate_count,
            "candidate_share_pct": totals.candidate_share,
            "candidates_per_quota": totals.candidates_per_quota,
        },
    }
