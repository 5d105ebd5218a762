"""Shared builders for in-memory corpora and on-disk fixture files."""

from __future__ import annotations

import csv
from pathlib import Path

import pytest

from selecta.corpus import (Corpus, DocType, Publication, ReconciliationRule,
                            StaffRecord)

# Acceptance criteria results collected by tests/test_acceptance.py; the
# terminal summary hook below prints one line per criterion.
ACCEPTANCE_RESULTS: dict[str, str] = {}


def record_criterion(name: str, passed: bool = True) -> None:
    ACCEPTANCE_RESULTS[name] = "PASS" if passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{name}: {ACCEPTANCE_RESULTS[name]}")


def make_pub(
    pub_id: str,
    *,
    year: int = 2004,
    sector: str = "Mathematics",
    journal: str = "J1",
    citations: int = 0,
    doc_type: DocType = DocType.ARTICLE,
    institutions: tuple[str, ...] = ("UTV",),
    affiliations: tuple[str, ...] = (),
    title: str = "",
) -> Publication:
    return Publication(
        pub_id=pub_id,
        title=title or f"Title {pub_id}",
        year=year,
        doc_type=doc_type,
        sector_code=sector,
        journal_id=journal,
        citations=citations,
        raw_affiliations=affiliations,
        institution_ids=institutions,
    )


def make_corpus(
    publications,
    journals=(),
    staff=(),
    rules=(),
    institutions=(),
    rejects=(),
    census_rows=None,
    window=None,
) -> Corpus:
    pubs = tuple(publications)
    return Corpus(
        publications=pubs,
        excluded=(),
        journals=tuple(journals),
        staff=tuple(staff),
        rules=tuple(rules),
        institutions=tuple(institutions),
        rejects=tuple(rejects),
        census_rows=census_rows if census_rows is not None else len(pubs),
        window=window,
    )


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


@pytest.fixture
def staff_record():
    def _make(institution_id: str, ud_code: int, fte: float) -> StaffRecord:
        return StaffRecord(institution_id, ud_code, fte)

    return _make
