"""Publication census loading, validation and affiliation reconciliation.

The census is the single messy input: malformed census rows are collected
into a rejects report (``row,reason``) instead of aborting the load, so the
accounting identity ``retained + excluded + rejects = input rows`` always
holds. The auxiliary tables (journal impact factors, staff roster,
reconciliation rules) are curated configuration and fail hard on the first
bad row.
"""

from __future__ import annotations

import csv
import logging
import re
import unicodedata
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

CENSUS_HEADER = ["pub_id", "title", "year", "doc_type", "sector_code",
                 "journal_id", "citations", "affiliations"]
JOURNAL_IF_HEADER = ["journal_id", "sector_code", "edition_year", "impact_factor"]
STAFF_HEADER = ["institution_id", "ud_code", "fte"]
RULES_HEADER = ["priority", "kind", "pattern", "institution_id"]
INSTITUTIONS_HEADER = ["institution_id", "canonical_name", "kind"]
REJECTS_HEADER = ["row", "reason"]

AFFILIATION_SEPARATOR = "|"

INSTITUTION_KINDS = ("university", "research_lab", "hospital", "other")


class CorpusError(Exception):
    """Unrecoverable problem in an input file (bad header, bad aux row, bad pattern)."""


class DocType(str, Enum):
    ARTICLE = "article"
    REVIEW = "review"
    OTHER = "other"

    @classmethod
    def from_raw(cls, raw: str) -> "DocType":
        """Map a raw census document type; anything beyond article/review is OTHER."""
        value = raw.strip().lower()
        if value == "article":
            return cls.ARTICLE
        if value == "review":
            return cls.REVIEW
        return cls.OTHER


@dataclass(frozen=True)
class Publication:
    pub_id: str
    title: str
    year: int
    doc_type: DocType
    sector_code: str
    journal_id: str
    citations: int
    raw_affiliations: tuple[str, ...]
    institution_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class JournalIfRecord:
    journal_id: str
    sector_code: str
    edition_year: int
    impact_factor: float


@dataclass(frozen=True)
class ReconciliationRule:
    priority: int
    kind: str  # "substr" | "regex"
    pattern: str
    institution_id: str
    order: int  # position in the rules file; (priority, order) is the total order


@dataclass(frozen=True)
class Institution:
    institution_id: str
    canonical_name: str
    kind: str = "other"


@dataclass(frozen=True)
class StaffRecord:
    institution_id: str
    ud_code: int
    fte: float


@dataclass(frozen=True)
class Reject:
    row: int  # 1-based line number in census.csv (header is line 1)
    reason: str


@dataclass(frozen=True)
class Corpus:
    """Immutable snapshot of all loaded tables.

    ``publications`` holds rows currently retained by the census filter;
    ``excluded`` holds loaded rows dropped by doc-type or window filtering.
    Before :func:`filter_census` runs, every loaded row is in ``publications``.
    """

    publications: tuple[Publication, ...]
    excluded: tuple[Publication, ...]
    journals: tuple[JournalIfRecord, ...]
    staff: tuple[StaffRecord, ...]
    rules: tuple[ReconciliationRule, ...]
    institutions: tuple[Institution, ...]
    rejects: tuple[Reject, ...]
    census_rows: int
    window: tuple[int, int] | None = None

    def publication_index(self) -> dict[str, Publication]:
        return {p.pub_id: p for p in self.publications}

    def staff_for(self, institution_id: str) -> tuple[StaffRecord, ...]:
        return tuple(r for r in self.staff if r.institution_id == institution_id)

    def accounting_ok(self) -> bool:
        return len(self.publications) + len(self.excluded) + len(self.rejects) == self.census_rows


def fold_text(text: str) -> str:
    """Case-insensitive, diacritic-folded form used for substring matching."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return stripped.casefold()


def strip_diacritics(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


class RuleSet:
    """Compiled reconciliation rules with (priority, file order) precedence.

    Substring patterns match against the folded (casefolded, diacritic-free)
    affiliation text. Regex patterns are compiled with ``re.IGNORECASE`` and
    searched against the diacritic-stripped text, so case classes inside the
    pattern keep their meaning. Invalid regexes fail at load time.
    """

    def __init__(self, rules: Sequence[ReconciliationRule]):
        self.rules = tuple(sorted(rules, key=lambda r: (r.priority, r.order)))
        self._compiled: list[tuple[ReconciliationRule, re.Pattern | str]] = []
        for rule in self.rules:
            if rule.kind == "regex":
                try:
                    matcher: re.Pattern | str = re.compile(rule.pattern, re.IGNORECASE)
                except re.error as exc:
                    raise CorpusError(
                        f"rules: invalid regex {rule.pattern!r} "
                        f"(priority {rule.priority}, rule #{rule.order}): {exc}"
                    ) from exc
            else:
                matcher = fold_text(rule.pattern)
            self._compiled.append((rule, matcher))

    def match(self, raw: str) -> tuple[str, ...]:
        """All institutions whose rules match ``raw``, best rule first, deduplicated."""
        folded = fold_text(raw)
        stripped = strip_diacritics(raw)
        hits: list[str] = []
        seen: set[str] = set()
        for rule, matcher in self._compiled:
            if rule.institution_id in seen:
                continue
            if isinstance(matcher, str):
                matched = matcher in folded
            else:
                matched = matcher.search(stripped) is not None
            if matched:
                hits.append(rule.institution_id)
                seen.add(rule.institution_id)
        return tuple(hits)


def reconcile_affiliation(raw: str, rules: RuleSet | Sequence[ReconciliationRule]) -> tuple[str, ...]:
    """Resolve one raw affiliation string to canonical institution ids.

    An empty result means the string is unmatched; it is logged and kept,
    never treated as an error (partial matching is normal for a national census).
    """
    ruleset = rules if isinstance(rules, RuleSet) else RuleSet(rules)
    ids = ruleset.match(raw)
    if not ids:
        logger.debug("unmatched affiliation: %r", raw)
    return ids


def reconcile_publication(pub: Publication, ruleset: RuleSet) -> Publication:
    """Fill ``institution_ids`` from the publication's raw affiliations (no duplicates)."""
    ids: list[str] = []
    seen: set[str] = set()
    for raw in pub.raw_affiliations:
        for inst in reconcile_affiliation(raw, ruleset):
            if inst not in seen:
                ids.append(inst)
                seen.add(inst)
    return replace(pub, institution_ids=tuple(ids))


def _open_csv(path: Path, expected_header: Sequence[str]) -> list[list[str]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise CorpusError(f"{path}: not valid UTF-8: {exc}") from exc
    if not rows:
        raise CorpusError(f"{path}: empty file, expected header {','.join(expected_header)}")
    header = [h.strip() for h in rows[0]]
    if header != list(expected_header):
        raise CorpusError(
            f"{path}: bad header {','.join(header)!r}, expected {','.join(expected_header)!r}"
        )
    return rows[1:]


def load_journal_if(path: Path) -> tuple[JournalIfRecord, ...]:
    records: list[JournalIfRecord] = []
    seen: set[tuple[str, str, int]] = set()
    for lineno, row in enumerate(_open_csv(path, JOURNAL_IF_HEADER), start=2):
        if len(row) != len(JOURNAL_IF_HEADER):
            raise CorpusError(f"{path}:{lineno}: expected {len(JOURNAL_IF_HEADER)} fields, got {len(row)}")
        journal_id, sector_code, year_s, if_s = (f.strip() for f in row)
        try:
            year = int(year_s)
            impact = float(if_s)
        except ValueError as exc:
            raise CorpusError(f"{path}:{lineno}: bad numeric field: {exc}") from exc
        if impact < 0:
            raise CorpusError(f"{path}:{lineno}: negative impact factor {impact}")
        key = (journal_id, sector_code, year)
        if key in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate (journal, sector, edition) {key}")
        seen.add(key)
        records.append(JournalIfRecord(journal_id, sector_code, year, impact))
    return tuple(records)


def load_staff(path: Path) -> tuple[StaffRecord, ...]:
    records: list[StaffRecord] = []
    seen: set[tuple[str, int]] = set()
    for lineno, row in enumerate(_open_csv(path, STAFF_HEADER), start=2):
        if len(row) != len(STAFF_HEADER):
            raise CorpusError(f"{path}:{lineno}: expected {len(STAFF_HEADER)} fields, got {len(row)}")
        institution_id, ud_s, fte_s = (f.strip() for f in row)
        try:
            ud_code = int(ud_s)
            fte = float(fte_s)
        except ValueError as exc:
            raise CorpusError(f"{path}:{lineno}: bad numeric field: {exc}") from exc
        if fte < 0:
            raise CorpusError(f"{path}:{lineno}: negative fte {fte}")
        key = (institution_id, ud_code)
        if key in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate staff record for {key}")
        seen.add(key)
        records.append(StaffRecord(institution_id, ud_code, fte))
    return tuple(records)


def load_rules(path: Path) -> tuple[ReconciliationRule, ...]:
    rules: list[ReconciliationRule] = []
    for lineno, row in enumerate(_open_csv(path, RULES_HEADER), start=2):
        order = lineno - 2
        if len(row) != len(RULES_HEADER):
            raise CorpusError(f"{path}:{lineno}: expected {len(RULES_HEADER)} fields, got {len(row)}")
        priority_s, kind, pattern, institution_id = (f.strip() for f in row)
        try:
            priority = int(priority_s)
        except ValueError as exc:
            raise CorpusError(f"{path}:{lineno}: bad priority {priority_s!r}") from exc
        if kind not in ("substr", "regex"):
            raise CorpusError(f"{path}:{lineno}: unknown rule kind {kind!r}")
        if not pattern:
            raise CorpusError(f"{path}:{lineno}: empty pattern")
        if not institution_id:
            raise CorpusError(f"{path}:{lineno}: empty institution_id")
        rules.append(ReconciliationRule(priority, kind, pattern, institution_id, order))
    return tuple(rules)


def load_institutions(path: Path) -> tuple[Institution, ...]:
    records: list[Institution] = []
    seen: set[str] = set()
    for lineno, row in enumerate(_open_csv(path, INSTITUTIONS_HEADER), start=2):
        if len(row) != len(INSTITUTIONS_HEADER):
            raise CorpusError(f"{path}:{lineno}: expected {len(INSTITUTIONS_HEADER)} fields, got {len(row)}")
        institution_id, name, kind = (f.strip() for f in row)
        if kind not in INSTITUTION_KINDS:
            raise CorpusError(f"{path}:{lineno}: unknown institution kind {kind!r}")
        if institution_id in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate institution {institution_id!r}")
        seen.add(institution_id)
        records.append(Institution(institution_id, name, kind))
    return tuple(records)


def _parse_census(
    path: Path,
    known_journals: set[str],
    known_sectors: set[str],
    ruleset: RuleSet,
) -> tuple[tuple[Publication, ...], tuple[Reject, ...], int]:
    publications: list[Publication] = []
    rejects: list[Reject] = []
    seen_ids: set[str] = set()
    rows = _open_csv(path, CENSUS_HEADER)
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(CENSUS_HEADER):
            rejects.append(Reject(lineno, f"expected {len(CENSUS_HEADER)} fields, got {len(row)}"))
            continue
        pub_id, title, year_s, doc_type_s, sector_code, journal_id, citations_s, affil_s = (
            f.strip() for f in row
        )
        if not pub_id:
            rejects.append(Reject(lineno, "empty pub_id"))
            continue
        if pub_id in seen_ids:
            rejects.append(Reject(lineno, f"duplicate pub_id {pub_id}"))
            continue
        try:
            year = int(year_s)
        except ValueError:
            rejects.append(Reject(lineno, f"bad year {year_s!r}"))
            continue
        try:
            citations = int(citations_s)
        except ValueError:
            rejects.append(Reject(lineno, f"bad citations {citations_s!r}"))
            continue
        if citations < 0:
            rejects.append(Reject(lineno, f"negative citations {citations}"))
            continue
        if journal_id not in known_journals:
            rejects.append(Reject(lineno, f"unknown journal {journal_id}"))
            continue
        if sector_code not in known_sectors:
            rejects.append(Reject(lineno, f"unknown sector {sector_code}"))
            continue
        affiliations = tuple(a.strip() for a in affil_s.split(AFFILIATION_SEPARATOR) if a.strip())
        pub = Publication(
            pub_id=pub_id,
            title=title,
            year=year,
            doc_type=DocType.from_raw(doc_type_s),
            sector_code=sector_code,
            journal_id=journal_id,
            citations=citations,
            raw_affiliations=affiliations,
        )
        seen_ids.add(pub_id)
        publications.append(reconcile_publication(pub, ruleset))
    return tuple(publications), tuple(rejects), len(rows)


def parse_corpus(
    census_file: str | Path,
    if_file: str | Path,
    staff_file: str | Path,
    rules_file: str | Path,
    institutions_file: str | Path | None = None,
) -> Corpus:
    """Load and cross-validate the census plus its three auxiliary tables.

    Census rows referencing a journal or sector absent from the impact-factor
    table, duplicating a pub_id, or failing to parse are routed to the rejects
    report with their line number. Affiliations are reconciled here, so the
    returned publications already carry canonical institution ids.

    The institution roster is the union of ids seen in the staff and rule
    tables; an optional institutions file adds display names and kinds.
    """
    journals = load_journal_if(Path(if_file))
    staff = load_staff(Path(staff_file))
    rules = load_rules(Path(rules_file))
    ruleset = RuleSet(rules)

    known_journals = {r.journal_id for r in journals}
    known_sectors = {r.sector_code for r in journals}
    publications, rejects, census_rows = _parse_census(
        Path(census_file), known_journals, known_sectors, ruleset
    )

    named: dict[str, Institution] = {}
    if institutions_file is not None:
        named = {i.institution_id: i for i in load_institutions(Path(institutions_file))}
    roster_ids = sorted({r.institution_id for r in staff} | {r.institution_id for r in rules})
    institutions = tuple(
        named.get(inst_id, Institution(inst_id, inst_id)) for inst_id in roster_ids
    )

    return Corpus(
        publications=publications,
        excluded=(),
        journals=journals,
        staff=staff,
        rules=rules,
        institutions=institutions,
        rejects=rejects,
        census_rows=census_rows,
    )


def filter_census(corpus: Corpus, window: tuple[int, int]) -> Corpus:
    """Retain article/review publications inside the observation window.

    Idempotent: previously excluded rows stay excluded, and re-filtering the
    retained set with the same window removes nothing further.
    """
    start, end = window
    if start > end:
        raise ValueError(f"empty window {window}")
    retained: list[Publication] = []
    excluded: list[Publication] = list(corpus.excluded)
    for pub in corpus.publications:
        if pub.doc_type in (DocType.ARTICLE, DocType.REVIEW) and start <= pub.year <= end:
            retained.append(pub)
        else:
            excluded.append(pub)
    logger.info(
        "census filter %s-%s: retained %d, excluded %d (of %d rows, %d rejects)",
        start, end, len(retained), len(excluded), corpus.census_rows, len(corpus.rejects),
    )
    return replace(
        corpus,
        publications=tuple(retained),
        excluded=tuple(excluded),
        window=window,
    )


def write_rejects(rejects: Iterable[Reject], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REJECTS_HEADER)
        for reject in rejects:
            writer.writerow([reject.row, reject.reason])
