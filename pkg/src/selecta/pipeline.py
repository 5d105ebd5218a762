"""Shared data-directory conventions for the CLI and the service.

A data directory holds the four interchange files (``census.csv``,
``journal_if.csv``, ``staff.csv``, ``rules.csv``), optionally
``institutions.csv``, ``ud_mapping.csv`` (falling back to the bundled
mapping) and ``config.json`` with the observation window. The corpus digest
fingerprints all of them, so stale intermediates and sessions created against
an older corpus are detectable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, CorpusError, filter_census, parse_corpus
from .taxonomy import UdMapping, default_mapping, load_mapping

REQUIRED_FILES = ("census.csv", "journal_if.csv", "staff.csv", "rules.csv")
OPTIONAL_FILES = ("institutions.csv", "ud_mapping.csv", "config.json")


@dataclass(frozen=True)
class LoadedData:
    corpus: Corpus  # filtered
    mapping: UdMapping
    window: tuple[int, int]
    digest: str


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def corpus_digest(data_dir: Path) -> str:
    """Fingerprint of every input file present, in fixed order."""
    digest = hashlib.sha256()
    for name in REQUIRED_FILES + OPTIONAL_FILES:
        path = data_dir / name
        if path.exists():
            digest.update(name.encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


def configured_window(data_dir: Path) -> tuple[int, int] | None:
    config = data_dir / "config.json"
    if not config.exists():
        return None
    doc = json.loads(config.read_text(encoding="utf-8"))
    window = doc.get("window")
    if not window:
        return None
    return int(window[0]), int(window[1])


def load_data_dir(data_dir: str | Path, window: tuple[int, int] | None = None) -> LoadedData:
    """Parse, reconcile and filter a data directory into an immutable corpus.

    The window comes from the argument, else ``config.json``, else the year
    span of the loaded census.
    """
    data_dir = Path(data_dir)
    for name in REQUIRED_FILES:
        if not (data_dir / name).exists():
            raise CorpusError(f"{data_dir}: missing required file {name}")
    institutions = data_dir / "institutions.csv"
    corpus = parse_corpus(
        data_dir / "census.csv",
        data_dir / "journal_if.csv",
        data_dir / "staff.csv",
        data_dir / "rules.csv",
        institutions_file=institutions if institutions.exists() else None,
    )
    if window is None:
        window = configured_window(data_dir)
    if window is None:
        years = [p.year for p in corpus.publications]
        if not years:
            raise CorpusError(f"{data_dir}: empty census and no configured window")
        window = (min(years), max(years))
    corpus = filter_census(corpus, window)

    mapping_file = data_dir / "ud_mapping.csv"
    mapping = load_mapping(mapping_file) if mapping_file.exists() else default_mapping()
    return LoadedData(
        corpus=corpus,
        mapping=mapping,
        window=window,
        digest=corpus_digest(data_dir),
    )
