"""Deterministic synthetic corpus generator.

The real census behind the methodology is licensed and cannot ship, so tests
and demos run on generated corpora: a national census of articles/reviews
spread over hard-science WoS sectors (including multi-discipline ones),
journals with per-year impact-factor editions (optionally with gaps, so some
publications have no usable journal ranking), a staff roster, and a
reconciliation rule set exercised by noisy affiliation variants.

Everything derives from a single seeded RNG, so a fixed spec always produces
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import random
import shutil
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import (CENSUS_HEADER, INSTITUTIONS_HEADER, JOURNAL_IF_HEADER,
                     RULES_HEADER, STAFF_HEADER)
from .taxonomy import default_mapping_path

import csv

# Fixture sectors, drawn from the bundled mapping: every discipline covered,
# six of them multi-discipline.
FIXTURE_SECTORS: tuple[str, ...] = (
    "Mathematics",
    "Mathematics, applied",
    "Statistics & probability",
    "Operations research & management science",
    "Physics, condensed matter",
    "Optics",
    "Astronomy & astrophysics",
    "Thermodynamics",
    "Chemistry. organic",
    "Chemistry. physical",
    "Electrochemistry",
    "Polymer science",
    "Geology",
    "Oceanography",
    "Meteorology & atmospheric sciences",
    "Geochemistry & geophysics",
    "Biochemistry & molecular biology",
    "Cell biology",
    "Microbiology",
    "Plant sciences",
    "Zoology",
    "Ecology",
    "Oncology",
    "Cardiac & cardiovascular systems",
    "Neurosciences",
    "Surgery",
    "Immunology",
    "Hematology",
    "Agronomy",
    "Food science & technology",
    "Veterinary sciences",
    "Forestry",
    "Engineering. electrical & electronic",
    "Telecommunications",
    "Energy & fuels",
    "Materials science, multidisciplinary",
    "Automation & control systems",
    "Engineering. ocean",
    "Environmental sciences",
    "Nanoscience & nanotechnology",
    "Computer science. information systems",
    "Physics, mathematical",
    "Physics, atomic, molecular & chemical",
)

CITIES = (
    "Milano", "Torino", "Padova", "Bologna", "Napoli", "Firenze",
    "Pisa", "Genova", "Verona", "Trento", "Bari", "Salerno",
)

UNMATCHED_AFFILIATIONS = (
    "Istituto Nazionale di Studi Avanzati, Roma",
    "CNR Sezione Materiali Innovativi",
    "Ospedale Regionale San Rocco",
    "Fondazione per la Ricerca Applicata",
    "Centro Studi Indipendente Alfa",
)


@dataclass(frozen=True)
class CorpusSpec:
    seed: int = 42
    window: tuple[int, int] = (2004, 2006)
    n_publications: int = 5500
    n_institutions: int = 10
    target_share: float = 0.25  # census share credited to the target institution
    target_fte: float = 400.0
    journals_per_sector: int = 8
    late_if_share: float = 0.12  # journals whose first IF edition is the last window year
    unmatched_share: float = 0.06  # publications carrying an extra unmatched affiliation
    reject_rows: int = 6
    review_share: float = 0.04
    other_doc_share: float = 0.03
    out_of_window_share: float = 0.02

    @property
    def target_institution(self) -> str:
        return "INST01"


def milan_shaped_spec(seed: int, scale: float = 0.25) -> CorpusSpec:
    """A corpus shaped like the motivating large-university case: quota from
    roughly 4 researchers per product, production several times the quota,
    full journal coverage so no discipline can fall short."""
    return CorpusSpec(
        seed=seed,
        n_publications=max(1200, int(8000 * scale)),
        target_share=0.28,
        target_fte=1670.0 * scale,
        late_if_share=0.0,
        reject_rows=0,
        out_of_window_share=0.0,
    )


def _institution_ids(spec: CorpusSpec) -> list[str]:
    return [f"INST{i + 1:02d}" for i in range(spec.n_institutions)]


def _variants(city: str) -> list[str]:
    return [
        f"Università degli Studi di {city}",
        f"Univ {city}, Dept of Physics",
        f"UNIV. {city.upper()} - DIP. SCIENZE",
        f"University of {city}, Institute of Biology",
        f"Università di {city}, Fac. Ingegneria",
    ]


def write_corpus_fixture(out_dir: str | Path, spec: CorpusSpec) -> Path:
    """Write census.csv, journal_if.csv, staff.csv, rules.csv,
    institutions.csv, ud_mapping.csv and config.json into ``out_dir``."""
    rng = random.Random(spec.seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    institutions = _institution_ids(spec)
    target = spec.target_institution
    cities = {inst: CITIES[i % len(CITIES)] for i, inst in enumerate(institutions)}

    # Journals and their impact-factor editions.
    years = list(range(spec.window[0], spec.window[1] + 1))
    journal_rows: list[list] = []
    journals_by_sector: dict[str, list[str]] = {}
    journal_first_edition: dict[str, int] = {}
    for s_idx, sector in enumerate(FIXTURE_SECTORS):
        sector_journals = []
        for j in range(spec.journals_per_sector):
            journal_id = f"J{s_idx:02d}{j:02d}"
            sector_journals.append(journal_id)
            late = rng.random() < spec.late_if_share
            first_year = years[-1] if late else years[0]
            journal_first_edition[journal_id] = first_year
            for year in years:
                if year < first_year:
                    continue
                impact = round(rng.lognormvariate(0.4, 0.8), 3)
                journal_rows.append([journal_id, sector, year, f"{impact:.3f}"])
        journals_by_sector[sector] = sector_journals

    # Staff roster: the target spreads its FTE over all 8 disciplines.
    staff_rows: list[list] = []
    target_ud_weights = [rng.uniform(0.5, 2.0) for _ in range(8)]
    weight_sum = sum(target_ud_weights)
    for ud, weight in enumerate(target_ud_weights, start=1):
        fte = round(spec.target_fte * weight / weight_sum, 1)
        staff_rows.append([target, ud, f"{fte:.1f}"])
    # Non-target rosters stay small relative to production so quotas are
    # attainable; real portfolios run several publications per FTE.
    for inst in institutions[1:]:
        for ud in range(1, 9):
            if rng.random() < 0.7:
                staff_rows.append([inst, ud, f"{rng.uniform(2.0, 14.0):.1f}"])

    # Reconciliation rules: two substring forms and one regex per institution.
    rules_rows: list[list] = []
    for inst in institutions:
        city = cities[inst]
        rules_rows.append([10, "substr", city.lower(), inst])
        rules_rows.append([20, "substr", f"univ {city.lower()}", inst])
        rules_rows.append([5, "regex", rf"universit\w*\s+(degli\s+studi\s+di\s+)?{city}", inst])

    institution_rows = [
        [inst, f"Università degli Studi di {cities[inst]}", "university"]
        for inst in institutions
    ]

    # Census.
    census_rows: list[list] = []
    doc_other_types = ("letter", "editorial", "note")
    sector_fertility = {s: rng.uniform(1.5, 14.0) for s in FIXTURE_SECTORS}
    for i in range(spec.n_publications):
        pub_id = f"P{i + 1:06d}"
        sector = rng.choice(FIXTURE_SECTORS)
        journal = rng.choice(journals_by_sector[sector])
        roll = rng.random()
        if roll < spec.other_doc_share:
            doc_type = rng.choice(doc_other_types)
        elif roll < spec.other_doc_share + spec.review_share:
            doc_type = "review"
        else:
            doc_type = "article"
        if rng.random() < spec.out_of_window_share:
            year = rng.choice((spec.window[0] - 1, spec.window[1] + 1))
        else:
            year = rng.choice(years)
        age_boost = {0: 1.6, 1: 1.0, 2: 0.45}.get(year - spec.window[0], 1.0)
        citations = int(rng.expovariate(1.0 / max(0.4, sector_fertility[sector] * age_boost)))

        owners = [target] if rng.random() < spec.target_share else [rng.choice(institutions[1:])]
        if rng.random() < 0.12:
            extra = rng.choice(institutions)
            if extra not in owners:
                owners.append(extra)
        affiliations = [rng.choice(_variants(cities[inst])) for inst in owners]
        if rng.random() < spec.unmatched_share:
            affiliations.append(rng.choice(UNMATCHED_AFFILIATIONS))
        title = f"Study {i + 1}: observations on {sector.lower()}"
        census_rows.append([
            pub_id, title, year, doc_type, sector, journal, citations,
            "|".join(affiliations),
        ])

    if spec.reject_rows:
        bad = [
            ["PBAD01", "Unknown journal row", years[0], "article",
             FIXTURE_SECTORS[0], "JZZZZ", 3, "Università degli Studi di Milano"],
            ["PBAD02", "Unknown sector row", years[0], "article",
             "Alchemy", journals_by_sector[FIXTURE_SECTORS[0]][0], 3,
             "Università degli Studi di Milano"],
            ["P000001", "Duplicate id row", years[0], "article",
             FIXTURE_SECTORS[0], journals_by_sector[FIXTURE_SECTORS[0]][0], 3,
             "Università degli Studi di Milano"],
            ["PBAD04", "Bad year row", "20x4", "article",
             FIXTURE_SECTORS[0], journals_by_sector[FIXTURE_SECTORS[0]][0], 3,
             "Università degli Studi di Milano"],
            ["PBAD05", "Bad citations row", years[0], "article",
             FIXTURE_SECTORS[0], journals_by_sector[FIXTURE_SECTORS[0]][0], "abc",
             "Università degli Studi di Milano"],
            ["PBAD06", "Negative citations row", years[0], "article",
             FIXTURE_SECTORS[0], journals_by_sector[FIXTURE_SECTORS[0]][0], -3,
             "Università degli Studi di Milano"],
        ]
        census_rows.extend(bad[: spec.reject_rows])

    def dump(name: str, header: list[str], rows: list[list]) -> None:
        with open(out / name, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)

    dump("census.csv", CENSUS_HEADER, census_rows)
    dump("journal_if.csv", JOURNAL_IF_HEADER, journal_rows)
    dump("staff.csv", STAFF_HEADER, staff_rows)
    dump("rules.csv", RULES_HEADER, rules_rows)
    dump("institutions.csv", INSTITUTIONS_HEADER, institution_rows)
    shutil.copyfile(default_mapping_path(), out / "ud_mapping.csv")
    (out / "config.json").write_text(
        json.dumps({"window": list(spec.window)}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="selecta.fixtures",
        description="Generate a synthetic corpus fixture for demos and tests.",
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--publications", type=int, default=5500)
    parser.add_argument("--milan-shaped", action="store_true",
                        help="large-university preset with full journal coverage")
    args = parser.parse_args(argv)
    if args.milan_shaped:
        spec = replace(milan_shaped_spec(args.seed), n_publications=args.publications)
    else:
        spec = CorpusSpec(seed=args.seed, n_publications=args.publications)
    path = write_corpus_fixture(args.out, spec)
    print(f"fixture written to {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
