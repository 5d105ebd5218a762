"""Per-publication quality indicators computed over national sector cohorts.

Three indicators:

* journal impact ranking (``jir``): percentile of the journal's impact factor
  within its sector's impact-factor distribution for one edition year, 0-100.
* article impact ranking (``air``): percentile of the article's citations
  within its sector-year citation cohort, 0-100.
* article impact index (``aii``): citations divided by the sector-year cohort
  mean; 1.0 means exactly average.

Percentiles are strict-less with the probe value included in its own
population: a value of 90 means 90% of the cohort is strictly lower; tied
values share a rank. Cohort means use ``math.fsum`` (exact compensated
summation), so results do not depend on member order and parallel cohort
evaluation stays bit-identical to sequential.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import fsum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, JournalIfRecord, Publication

SCORES_HEADER = ["pub_id", "jir", "air", "aii", "jir_available"]


class MetricsError(Exception):
    pass


@dataclass(frozen=True)
class Cohort:
    """One normalization population: citation counts of a sector-year, or
    impact factors of a sector-edition (``year`` is the edition year then)."""

    sector_code: str
    year: int | None
    member_ids: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.member_ids:
            raise MetricsError(f"empty cohort for sector {self.sector_code!r} year {self.year}")
        if len(self.member_ids) != len(self.values):
            raise MetricsError("cohort member/value length mismatch")

    def mean(self) -> float:
        return fsum(self.values) / len(self.values)


@dataclass(frozen=True)
class IndicatorScores:
    pub_id: str
    jir: float | None  # None when the journal has no usable impact factor
    air: float
    aii: float

    @property
    def jir_available(self) -> bool:
        return self.jir is not None


def percentile_rank(x: float, population: Sequence[float]) -> float:
    """Share of the population strictly below ``x``, on a 0-100 scale.

    The population is expected to contain x's own cohort (x included), so a
    singleton population always yields 0.0 and ties share a value.
    """
    if not population:
        raise MetricsError("percentile_rank: empty population")
    below = sum(1 for p in population if p < x)
    return 100.0 * below / len(population)


class IfTable:
    """Indexed journal impact-factor records.

    ``sector_population(sector, edition)`` is the full national IF
    distribution for that sector and edition year; the percentile population
    for a journal is always taken at the edition year its own IF came from.
    """

    def __init__(self, records: Iterable[JournalIfRecord]):
        self.records = tuple(records)
        self._editions: dict[tuple[str, str], dict[int, float]] = {}
        self._populations: dict[tuple[str, int], list[float]] = {}
        for rec in self.records:
            self._editions.setdefault((rec.journal_id, rec.sector_code), {})[
                rec.edition_year
            ] = rec.impact_factor
            self._populations.setdefault((rec.sector_code, rec.edition_year), []).append(
                rec.impact_factor
            )

    def resolve_edition(self, journal_id: str, sector_code: str, pub_year: int) -> int | None:
        """Edition year to score against: exact match, else nearest earlier, else None."""
        editions = self._editions.get((journal_id, sector_code))
        if not editions:
            return None
        usable = [y for y in editions if y <= pub_year]
        if not usable:
            return None
        return max(usable)

    def impact_factor(self, journal_id: str, sector_code: str, edition_year: int) -> float | None:
        editions = self._editions.get((journal_id, sector_code))
        if not editions:
            return None
        return editions.get(edition_year)

    def sector_population(self, sector_code: str, edition_year: int) -> tuple[float, ...]:
        return tuple(self._populations.get((sector_code, edition_year), ()))


def compute_jir(
    journal_id: str, sector_code: str, pub_year: int, if_table: IfTable
) -> float | None:
    """Journal impact ranking, or None when no edition at or before pub_year exists."""
    edition = if_table.resolve_edition(journal_id, sector_code, pub_year)
    if edition is None:
        return None
    own_if = if_table.impact_factor(journal_id, sector_code, edition)
    assert own_if is not None
    return percentile_rank(own_if, if_table.sector_population(sector_code, edition))


def compute_air(pub: Publication, cohort: Cohort) -> float:
    """Citation percentile of the article within its sector-year cohort."""
    if pub.pub_id not in cohort.member_ids:
        raise MetricsError(f"publication {pub.pub_id} not in cohort "
                           f"({cohort.sector_code}, {cohort.year})")
    return percentile_rank(float(pub.citations), cohort.values)


def compute_aii(pub: Publication, cohort: Cohort) -> float:
    """Citations over the cohort mean; every member of a zero-citation cohort
    gets 1.0 (all tied at the average), which preserves mean-of-aii = 1."""
    if pub.pub_id not in cohort.member_ids:
        raise MetricsError(f"publication {pub.pub_id} not in cohort "
                           f"({cohort.sector_code}, {cohort.year})")
    mean = cohort.mean()
    if mean == 0.0:
        return 1.0
    return pub.citations / mean


def normalized_if(
    journal_id: str, sector_code: str, edition_year: int, if_table: IfTable
) -> float | None:
    """Journal IF divided by the sector's mean IF for that edition year.

    Looks up the stated edition only (no fallback); a zero-mean sector puts
    every journal at 1.0, mirroring the zero-citation cohort rule.
    """
    own_if = if_table.impact_factor(journal_id, sector_code, edition_year)
    if own_if is None:
        return None
    population = if_table.sector_population(sector_code, edition_year)
    mean = fsum(population) / len(population)
    if mean == 0.0:
        return 1.0
    return own_if / mean


def publication_normalized_if(pub: Publication, if_table: IfTable) -> float | None:
    """Normalized IF of the publication's journal at the edition year the
    journal would be scored against (exact year, else nearest earlier)."""
    edition = if_table.resolve_edition(pub.journal_id, pub.sector_code, pub.year)
    if edition is None:
        return None
    return normalized_if(pub.journal_id, pub.sector_code, edition, if_table)


def build_citation_cohorts(publications: Iterable[Publication]) -> dict[tuple[str, int], Cohort]:
    """Group the national census into (sector, year) citation cohorts."""
    grouped: dict[tuple[str, int], list[Publication]] = {}
    for pub in publications:
        grouped.setdefault((pub.sector_code, pub.year), []).append(pub)
    cohorts: dict[tuple[str, int], Cohort] = {}
    for key, members in grouped.items():
        members.sort(key=lambda p: p.pub_id)
        cohorts[key] = Cohort(
            sector_code=key[0],
            year=key[1],
            member_ids=tuple(p.pub_id for p in members),
            values=tuple(float(p.citations) for p in members),
        )
    return cohorts


def score_corpus(corpus: Corpus) -> dict[str, IndicatorScores]:
    """Score every retained census publication against national cohorts.

    Citation cohorts span the whole ingested corpus (never a single
    institution's pool); journal cohorts come from the IF table. The result
    is keyed and ordered by pub_id, independent of census row order.
    """
    if_table = IfTable(corpus.journals)
    cohorts = build_citation_cohorts(corpus.publications)
    scores: dict[str, IndicatorScores] = {}
    for pub in sorted(corpus.publications, key=lambda p: p.pub_id):
        cohort = cohorts[(pub.sector_code, pub.year)]
        scores[pub.pub_id] = IndicatorScores(
            pub_id=pub.pub_id,
            jir=compute_jir(pub.journal_id, pub.sector_code, pub.year, if_table),
            air=compute_air(pub, cohort),
            aii=compute_aii(pub, cohort),
        )
    return scores


def scores_csv_text(scores: Mapping[str, IndicatorScores]) -> str:
    """Scores as CSV with 6-decimal fixed formatting, rows ordered by pub_id."""
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCORES_HEADER)
    for pub_id in sorted(scores):
        s = scores[pub_id]
        writer.writerow([
            pub_id,
            "" if s.jir is None else f"{s.jir:.6f}",
            f"{s.air:.6f}",
            f"{s.aii:.6f}",
            1 if s.jir_available else 0,
        ])
    return buf.getvalue()


def write_scores_csv(scores: Mapping[str, IndicatorScores], path: str | Path) -> None:
    Path(path).write_text(scores_csv_text(scores), encoding="utf-8")


def read_scores_csv(path: str | Path) -> dict[str, IndicatorScores]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SCORES_HEADER:
            raise MetricsError(f"{path}: bad scores header {header!r}")
        scores: dict[str, IndicatorScores] = {}
        for row in reader:
            pub_id, jir_s, air_s, aii_s, avail_s = row
            jir = float(jir_s) if avail_s == "1" else None
            scores[pub_id] = IndicatorScores(pub_id, jir, float(air_s), float(aii_s))
        return scores
