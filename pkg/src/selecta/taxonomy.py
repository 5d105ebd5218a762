"""WoS sector to university-discipline (UD) mapping and per-institution pools.

A sector can map to several disciplines (e.g. ocean engineering counts for
both Earth science and engineering); such publications are candidates in
every mapped pool, and the portfolio finalizer is responsible for never
submitting the same publication twice.

UD codes are configuration, not constants. The bundled default mapping
covers the 8 hard-science disciplines (1 mathematics and computer science,
2 physics, 3 chemistry, 4 earth science, 5 biology, 6 medicine,
7 agricultural and veterinary science, 8 industrial and information
engineering).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import Corpus, Publication

UD_MAPPING_HEADER = ["sector_code", "ud_codes"]
UD_LIST_SEPARATOR = ";"

DEFAULT_UD_CODES: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8)

UD_NAMES: dict[int, str] = {
    1: "Mathematics and computer science",
    2: "Physics",
    3: "Chemistry",
    4: "Earth science",
    5: "Biology",
    6: "Medicine",
    7: "Agricultural and veterinary science",
    8: "Industrial and information engineering",
}


class TaxonomyError(Exception):
    pass


@dataclass(frozen=True)
class UdMapping:
    sector_to_uds: Mapping[str, frozenset[int]]
    ud_codes: tuple[int, ...]

    def uds_for(self, sector_code: str) -> frozenset[int]:
        try:
            return self.sector_to_uds[sector_code]
        except KeyError:
            raise TaxonomyError(f"sector {sector_code!r} has no UD mapping") from None


@dataclass(frozen=True)
class UdPool:
    institution_id: str
    ud_code: int
    pub_ids: tuple[str, ...]  # ordered by pub_id

    def __len__(self) -> int:
        return len(self.pub_ids)


def load_mapping(
    mapping_file: str | Path, ud_codes: Iterable[int] = DEFAULT_UD_CODES
) -> UdMapping:
    """Load a ``sector_code,ud_codes`` file, ud list separated by ``;``.

    Rows with an empty UD set or a UD outside the configured list are load
    errors naming the row.
    """
    ud_codes = tuple(ud_codes)
    allowed = set(ud_codes)
    path = Path(mapping_file)
    mapping: dict[str, frozenset[int]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != UD_MAPPING_HEADER:
            raise TaxonomyError(f"{path}: bad header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise TaxonomyError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            sector_code = row[0].strip()
            parts = [p.strip() for p in row[1].split(UD_LIST_SEPARATOR) if p.strip()]
            if not sector_code:
                raise TaxonomyError(f"{path}:{lineno}: empty sector code")
            if not parts:
                raise TaxonomyError(f"{path}:{lineno}: sector {sector_code!r} has empty UD set")
            uds: set[int] = set()
            for part in parts:
                try:
                    ud = int(part)
                except ValueError as exc:
                    raise TaxonomyError(f"{path}:{lineno}: bad UD code {part!r}") from exc
                if ud not in allowed:
                    raise TaxonomyError(
                        f"{path}:{lineno}: UD {ud} not in configured list {sorted(allowed)}"
                    )
                uds.add(ud)
            if sector_code in mapping:
                raise TaxonomyError(f"{path}:{lineno}: duplicate sector {sector_code!r}")
            mapping[sector_code] = frozenset(uds)
    return UdMapping(sector_to_uds=mapping, ud_codes=ud_codes)


def default_mapping() -> UdMapping:
    """The bundled hard-science mapping (170 WoS sectors onto 8 disciplines)."""
    with resources.as_file(resources.files("selecta.data") / "ud_mapping.csv") as path:
        return load_mapping(path)


def default_mapping_path() -> Path:
    with resources.as_file(resources.files("selecta.data") / "ud_mapping.csv") as path:
        return Path(path)


def build_pools(corpus: Corpus, mapping: UdMapping, institution_id: str) -> list[UdPool]:
    """One pool per configured UD (empty pools included), each holding every
    retained publication of the institution whose sector maps to that UD.

    A multi-UD publication appears in every mapped pool. Pool contents are
    ordered by pub_id, so they are independent of census row order.
    """
    members: dict[int, list[str]] = {ud: [] for ud in mapping.ud_codes}
    for pub in corpus.publications:
        if institution_id not in pub.institution_ids:
            continue
        for ud in mapping.uds_for(pub.sector_code):
            members[ud].append(pub.pub_id)
    return [
        UdPool(institution_id=institution_id, ud_code=ud, pub_ids=tuple(sorted(ids)))
        for ud, ids in sorted(members.items())
    ]


def institution_publications(corpus: Corpus, institution_id: str) -> list[Publication]:
    return [p for p in corpus.publications if institution_id in p.institution_ids]
