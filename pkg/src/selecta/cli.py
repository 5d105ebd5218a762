"""Batch driver for the pipeline: ingest, score, select, report, audit, serve.

Every subcommand recomputes its results in-process from the raw data
directory, so a staged pipeline is byte-identical to a single in-process run;
the written manifests carry content digests of inputs and outputs, letting a
later stage refuse to run over stale intermediates. On any failure the
command exits nonzero with a one-line reason and removes the files it was
about to produce.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import reporting
from .corpus import Corpus, CorpusError, REJECTS_HEADER
from .metrics import IfTable, MetricsError, score_corpus, scores_csv_text
from .pipeline import corpus_digest, file_digest, load_data_dir
from .reporting import ReportingError
from .selector import (DEFAULT_WEIGHTS, SelectionError, SelectionSession,
                       ValidationFailure, compute_quotas, current_picks,
                       recursive_select)
from .taxonomy import TaxonomyError, build_pools

VALIDATED_HEADER = ["pub_id", "title", "year", "doc_type", "sector_code",
                    "journal_id", "citations", "affiliations",
                    "institution_ids", "retained"]


class CliError(Exception):
    pass


class OutputStager:
    """Collect outputs in memory; nothing touches disk unless the command
    succeeds, so failures leave no partial artifacts."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self._outputs: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self._outputs[name] = text

    def digest_of(self, name: str) -> str:
        import hashlib

        return hashlib.sha256(self._outputs[name].encode("utf-8")).hexdigest()

    def names(self) -> list[str]:
        return sorted(self._outputs)

    def commit(self) -> list[Path]:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []
        try:
            for name in self.names():
                path = self.out_dir / name
                tmp = path.with_name(path.name + ".tmp")
                tmp.write_text(self._outputs[name], encoding="utf-8")
                os.replace(tmp, path)
                written.append(path)
        except OSError:
            for path in written:
                path.unlink(missing_ok=True)
            raise
        return written


def _json_text(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _parse_window(text: str | None) -> tuple[int, int] | None:
    if text is None:
        return None
    try:
        start, end = text.split(":")
        return int(start), int(end)
    except ValueError:
        raise CliError(f"bad --window {text!r}, expected START:END like 2004:2006")


def _window_from(args, *manifests: dict | None) -> tuple[int, int] | None:
    """Explicit flag, else the window an earlier stage recorded, else None
    (load_data_dir then falls back to config.json / the census span)."""
    window = _parse_window(args.window)
    if window is not None:
        return window
    for manifest in manifests:
        if manifest and manifest.get("window"):
            recorded = manifest["window"]
            return int(recorded[0]), int(recorded[1])
    return None


def _load_manifest(out_dir: Path, name: str) -> dict | None:
    path = out_dir / name
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))


def _require_fresh(manifest: dict | None, stage: str, data_dir: Path,
                   out_dir: Path) -> dict:
    if manifest is None:
        raise CliError(f"{stage}: missing manifest in {out_dir}, run the earlier stage first")
    if manifest.get("corpus_digest") != corpus_digest(data_dir):
        raise CliError(f"{stage}: stale intermediates, data directory changed since the "
                       "earlier stage ran")
    for name, digest in manifest.get("outputs", {}).items():
        path = out_dir / name
        if not path.exists() or file_digest(path) != digest:
            raise CliError(f"{stage}: stale intermediate {name}, rerun the earlier stage")
    return manifest


def _validated_corpus_rows(corpus: Corpus) -> list[list]:
    rows = []
    for pub, retained in sorted(
        [(p, 1) for p in corpus.publications] + [(p, 0) for p in corpus.excluded],
        key=lambda item: item[0].pub_id,
    ):
        rows.append([
            pub.pub_id, pub.title, pub.year, pub.doc_type.value, pub.sector_code,
            pub.journal_id, pub.citations, "|".join(pub.raw_affiliations),
            "|".join(pub.institution_ids), retained,
        ])
    return rows


def cmd_ingest(args) -> int:
    data_dir = Path(args.data_dir)
    window = _parse_window(args.window)
    data = load_data_dir(data_dir, window)
    corpus = data.corpus
    stager = OutputStager(Path(args.out))
    stager.add("corpus_validated.csv", _csv_text(VALIDATED_HEADER, _validated_corpus_rows(corpus)))
    stager.add("rejects.csv", _csv_text(REJECTS_HEADER,
                                        [[r.row, r.reason] for r in corpus.rejects]))
    manifest = {
        "command": "ingest",
        "window": list(data.window),
        "corpus_digest": data.digest,
        "counts": {
            "input_rows": corpus.census_rows,
            "retained": len(corpus.publications),
            "excluded": len(corpus.excluded),
            "rejects": len(corpus.rejects),
        },
        "outputs": {name: stager.digest_of(name) for name in stager.names()},
    }
    stager.add("ingest_manifest.json", _json_text(manifest))
    stager.commit()
    counts = manifest["counts"]
    print(f"ingest: {counts['retained']} retained, {counts['excluded']} excluded, "
          f"{counts['rejects']} rejects of {counts['input_rows']} rows")
    return 0


def cmd_score(args) -> int:
    data_dir = Path(args.data_dir)
    out_dir = Path(args.out)
    ingest_manifest = _require_fresh(
        _load_manifest(out_dir, "ingest_manifest.json"), "score", data_dir, out_dir)
    data = load_data_dir(data_dir, _window_from(args, ingest_manifest))
    scores = score_corpus(data.corpus)
    stager = OutputStager(out_dir)
    stager.add("scores.csv", scores_csv_text(scores))
    manifest = {
        "command": "score",
        "window": list(data.window),
        "corpus_digest": data.digest,
        "outputs": {"scores.csv": stager.digest_of("scores.csv")},
    }
    stager.add("score_manifest.json", _json_text(manifest))
    stager.commit()
    print(f"score: {len(scores)} publications scored")
    return 0


def _selection_payload(data, plan, pools, results, picks) -> dict:
    return {
        "institution_id": plan.institution_id,
        "ratio": plan.ratio,
        "window": list(data.window),
        "weights": list(DEFAULT_WEIGHTS),
        "corpus_digest": data.digest,
        "quota_plan": {
            "global_quota": plan.global_quota,
            "per_ud": {str(ud): q for ud, q in sorted(plan.per_ud.items())},
        },
        "pool_sizes": {str(ud): len(p) for ud, p in sorted(pools.items())},
        "results": {
            str(ud): {
                "k": r.k,
                "shortfall": r.shortfall,
                "set_jir": sorted(r.set_jir),
                "set_air": sorted(r.set_air),
                "set_aii": sorted(r.set_aii),
                "intersection": sorted(r.intersection),
                "candidates": sorted(r.candidates),
            }
            for ud, r in sorted(results.items())
        },
        "default_picks": {
            str(ud): [[pub_id, source] for pub_id, source in p.picks]
            for ud, p in sorted(picks.items())
        },
        "deficits": {str(ud): p.deficit for ud, p in sorted(picks.items()) if p.deficit},
    }


def _run_selection(data, institution_id: str, ratio: float):
    staff = data.corpus.staff_for(institution_id)
    if not staff:
        raise CliError(f"no staff roster for institution {institution_id!r}")
    plan = compute_quotas(staff, ratio)
    scores = score_corpus(data.corpus)
    pools = {p.ud_code: p for p in build_pools(data.corpus, data.mapping, institution_id)}
    results = {ud: recursive_select(pools[ud], scores, quota)
               for ud, quota in sorted(plan.per_ud.items())}
    session = SelectionSession(session_id="cli", institution_id=institution_id,
                               quota_plan=plan, corpus_digest=data.digest)
    picks = current_picks(session, results, pools, scores)
    return plan, scores, pools, results, picks


def cmd_select(args) -> int:
    data_dir = Path(args.data_dir)
    out_dir = Path(args.out)
    score_manifest = _load_manifest(out_dir, "score_manifest.json")
    if score_manifest is not None:
        _require_fresh(score_manifest, "select", data_dir, out_dir)
    data = load_data_dir(data_dir, _window_from(args, score_manifest))
    plan, scores, pools, results, picks = _run_selection(
        data, args.institution, args.ratio)
    payload = _selection_payload(data, plan, pools, results, picks)
    stager = OutputStager(out_dir)
    stager.add("selection.json", _json_text(payload))
    manifest = {
        "command": "select",
        "institution_id": plan.institution_id,
        "ratio": plan.ratio,
        "window": list(data.window),
        "corpus_digest": data.digest,
        "global_quota": plan.global_quota,
        "per_ud": payload["quota_plan"]["per_ud"],
        "weights": payload["weights"],
        "k_per_ud": {ud: r["k"] for ud, r in payload["results"].items()},
        "shortfall": {ud: r["shortfall"] for ud, r in payload["results"].items()},
        "outputs": {"selection.json": stager.digest_of("selection.json")},
    }
    stager.add("selection_manifest.json", _json_text(manifest))
    stager.commit()
    ks = ", ".join(f"UD{ud}:k={r.k}" for ud, r in sorted(results.items()))
    print(f"select: quota {plan.global_quota} for {plan.institution_id} ({ks})")
    return 0


def cmd_report(args) -> int:
    data_dir = Path(args.data_dir)
    out_dir = Path(args.out)
    selection_manifest = _require_fresh(
        _load_manifest(out_dir, "selection_manifest.json"), "report", data_dir, out_dir)
    data = load_data_dir(data_dir, _window_from(args, selection_manifest))
    institution_id = selection_manifest["institution_id"]
    ratio = selection_manifest["ratio"]
    plan, scores, pools, results, _picks = _run_selection(data, institution_id, ratio)

    publications = data.corpus.publication_index()
    fte_by_ud: dict[int, float] = {}
    for rec in data.corpus.staff_for(institution_id):
        fte_by_ud[rec.ud_code] = fte_by_ud.get(rec.ud_code, 0.0) + rec.fte

    summary = reporting.build_summary(plan, DEFAULT_WEIGHTS, pools, results,
                                      scores, publications, fte_by_ud)
    stager = OutputStager(out_dir)
    if args.format == "csv":
        stager.add("report_table2.csv",
                   reporting.render_table2(reporting.ud_summary(pools, plan, results, fte_by_ud)))
        stager.add("report_table3.csv",
                   reporting.render_table3(reporting.set_size_report(results, pools)))
        stager.add("report_table4.csv",
                   reporting.render_table4(reporting.intersection_averages(results, scores)))
        stager.add("report_table5.csv",
                   reporting.render_table5(reporting.year_distribution(results, pools, publications)))
        stager.add("report_table6.csv",
                   reporting.render_table6(reporting.sector_distribution(results, pools, publications)))
        if args.compare:
            _, _, pools_b, results_b, _ = _run_selection(data, args.compare, ratio)
            comparison = reporting.sector_comparison(
                (results, pools), (results_b, pools_b), publications)
            stager.add("report_table7.csv", reporting.render_table7(comparison))
            summary["comparison_institution_id"] = args.compare
    stager.add("report_summary.json", _json_text(summary))
    stager.commit()
    print(f"report: wrote {', '.join(stager.names())}")
    return 0


def _read_id_list(path: Path) -> list[str]:
    if not path.exists():
        raise CliError(f"cannot read submitted list {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(f.strip() for f in row)]
    if not rows:
        return []
    header = [f.strip() for f in rows[0]]
    if "pub_id" in header:
        column = header.index("pub_id")
        rows = rows[1:]
    else:
        column = 0
    return [row[column].strip() for row in rows]


def cmd_audit(args) -> int:
    data_dir = Path(args.data_dir)
    data = load_data_dir(data_dir, _parse_window(args.window))
    scores = score_corpus(data.corpus)
    publications = data.corpus.publication_index()

    if args.ud is not None:
        pools = {p.ud_code: p
                 for p in build_pools(data.corpus, data.mapping, args.institution)}
        if args.ud not in pools:
            raise CliError(f"no UD {args.ud} for institution {args.institution!r}")
        portfolio = list(pools[args.ud].pub_ids)
    else:
        portfolio = sorted(
            p.pub_id for p in data.corpus.publications
            if args.institution in p.institution_ids
        )
    if not portfolio:
        raise CliError(f"empty portfolio for institution {args.institution!r}")

    submitted = _read_id_list(Path(args.submitted))
    values = reporting.audit_metric_values(
        args.metric, {p: publications[p] for p in portfolio if p in publications},
        scores, IfTable(data.corpus.journals))
    fraction = reporting.median_audit(submitted, portfolio, values)

    doc = {
        "institution_id": args.institution,
        "ud_code": args.ud,
        "metric": args.metric,
        "portfolio_size": len(portfolio),
        "submitted": len(submitted),
        "below_median_fraction": fraction,
    }
    stager = OutputStager(Path(args.out))
    stager.add("audit.json", _json_text(doc))
    stager.commit()
    print(f"audit: metric={args.metric} submitted={len(submitted)} "
          f"below_median_fraction={fraction:.4f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    data_dir = args.data_dir or os.environ.get("SELECTA_DATA_DIR")
    if not data_dir:
        raise CliError("serve: --data-dir or SELECTA_DATA_DIR required")
    port = args.port or int(os.environ.get("SELECTA_PORT", "8877"))
    app = create_app(data_dir)
    uvicorn.run(app, host=args.host, port=port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selecta",
        description="Bibliometric selection support for research assessment submissions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--data-dir", required=True, help="corpus data directory")
        p.add_argument("--window", help="observation window, e.g. 2004:2006")
        if out:
            p.add_argument("--out", required=True, help="output directory")

    p_ingest = sub.add_parser("ingest", help="validate the census, write rejects")
    common(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_score = sub.add_parser("score", help="score every census publication")
    common(p_score)
    p_score.set_defaults(func=cmd_score)

    p_select = sub.add_parser("select", help="run the recursive intersection selection")
    common(p_select)
    p_select.add_argument("--institution", required=True)
    p_select.add_argument("--ratio", type=float, default=0.25)
    p_select.set_defaults(func=cmd_select)

    p_report = sub.add_parser("report", help="write diagnostic report tables")
    common(p_report)
    p_report.add_argument("--format", choices=("csv", "structured"), default="csv")
    p_report.add_argument("--compare",
                          help="second institution for the sector comparison table")
    p_report.set_defaults(func=cmd_report)

    p_audit = sub.add_parser("audit", help="below-median audit of a submitted list")
    common(p_audit)
    p_audit.add_argument("--institution", required=True)
    p_audit.add_argument("--ud", type=int)
    p_audit.add_argument("--metric", choices=reporting.AUDIT_METRICS,
                         default="normalized_if")
    p_audit.add_argument("--submitted", required=True,
                         help="CSV of pub ids (pub_id column or single column)")
    p_audit.set_defaults(func=cmd_audit)

    p_serve = sub.add_parser("serve", help="start the session service")
    p_serve.add_argument("--data-dir")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, CorpusError, MetricsError, TaxonomyError, SelectionError,
            ReportingError, ValidationFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # keep the one-line contract even for surprises
        print(f"error: unexpected: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
