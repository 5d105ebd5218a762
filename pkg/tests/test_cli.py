"""Batch pipeline: staging, manifests, stale detection, determinism, audit."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from selecta.cli import main
from selecta.fixtures import CorpusSpec, write_corpus_fixture
from selecta.metrics import score_corpus, scores_csv_text
from selecta.pipeline import load_data_dir
from selecta.selector import compute_quotas, recursive_select
from selecta.taxonomy import build_pools

from conftest import write_csv

SPEC = CorpusSpec(seed=23, n_publications=700, n_institutions=5, target_fte=90.0)


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("cli_data")
    write_corpus_fixture(out, SPEC)
    return out


def run(*argv) -> int:
    return main([str(a) for a in argv])


def run_pipeline(data_dir: Path, out: Path) -> None:
    assert run("ingest", "--data-dir", data_dir, "--out", out) == 0
    assert run("score", "--data-dir", data_dir, "--out", out) == 0
    assert run("select", "--data-dir", data_dir, "--out", out,
               "--institution", "INST01", "--ratio", "0.25") == 0
    assert run("report", "--data-dir", data_dir, "--out", out,
               "--compare", "INST02") == 0


class TestPipeline:
    def test_artifacts_and_counts(self, data_dir, tmp_path):
        out = tmp_path / "out"
        run_pipeline(data_dir, out)
        for name in ("corpus_validated.csv", "rejects.csv", "ingest_manifest.json",
                     "scores.csv", "score_manifest.json", "selection.json",
                     "selection_manifest.json", "report_summary.json"):
            assert (out / name).exists(), name
        for n in range(2, 8):
            assert (out / f"report_table{n}.csv").exists(), n
        manifest = json.loads((out / "ingest_manifest.json").read_text())
        counts = manifest["counts"]
        assert counts["input_rows"] == counts["retained"] + counts["excluded"] + counts["rejects"]
        assert counts["rejects"] == SPEC.reject_rows

    def test_pipeline_is_byte_deterministic(self, data_dir, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_pipeline(data_dir, out_a)
        run_pipeline(data_dir, out_b)
        names = sorted(p.name for p in out_a.iterdir())
        assert names == sorted(p.name for p in out_b.iterdir())
        for name in names:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

    def test_matches_in_process_run(self, data_dir, tmp_path):
        # Staged CLI pipeline output == single in-process computation.
        out = tmp_path / "out"
        run_pipeline(data_dir, out)
        data = load_data_dir(data_dir)
        scores = score_corpus(data.corpus)
        assert (out / "scores.csv").read_text(encoding="utf-8") == scores_csv_text(scores)
        plan = compute_quotas(data.corpus.staff_for("INST01"), 0.25)
        pools = {p.ud_code: p for p in build_pools(data.corpus, data.mapping, "INST01")}
        selection = json.loads((out / "selection.json").read_text())
        for ud, quota in plan.per_ud.items():
            result = recursive_select(pools[ud], scores, quota)
            doc = selection["results"][str(ud)]
            assert doc["k"] == result.k
            assert doc["shortfall"] == result.shortfall
            assert doc["intersection"] == sorted(result.intersection)
            assert doc["candidates"] == sorted(result.candidates)

    def test_score_requires_ingest(self, data_dir, tmp_path, capsys):
        out = tmp_path / "fresh"
        assert run("score", "--data-dir", data_dir, "--out", out) == 1
        assert "missing manifest" in capsys.readouterr().err

    def test_stale_intermediates_detected(self, data_dir, tmp_path, capsys):
        out = tmp_path / "out"
        assert run("ingest", "--data-dir", data_dir, "--out", out) == 0
        mutated = tmp_path / "mutated_data"
        mutated.mkdir()
        for p in data_dir.iterdir():
            (mutated / p.name).write_bytes(p.read_bytes())
        with open(mutated / "census.csv", "a", encoding="utf-8") as fh:
            fh.write("PNEW,t,2004,article,Mathematics,J0000,1,Univ Milano\n")
        assert run("score", "--data-dir", mutated, "--out", out) == 1
        assert "stale" in capsys.readouterr().err

    def test_window_flag_chains_through_manifests(self, data_dir, tmp_path):
        # ingest with an explicit narrow window; score/select inherit it from
        # the manifests instead of silently reverting to config.json.
        out = tmp_path / "out"
        assert run("ingest", "--data-dir", data_dir, "--out", out,
                   "--window", "2005:2005") == 0
        assert run("score", "--data-dir", data_dir, "--out", out) == 0
        assert run("select", "--data-dir", data_dir, "--out", out,
                   "--institution", "INST01") == 0
        score_manifest = json.loads((out / "score_manifest.json").read_text())
        assert score_manifest["window"] == [2005, 2005]
        selection = json.loads((out / "selection.json").read_text())
        assert selection["window"] == [2005, 2005]
        counts = json.loads((out / "ingest_manifest.json").read_text())["counts"]
        retained = {
            row.split(",")[0]
            for row in (out / "scores.csv").read_text().splitlines()[1:]
        }
        assert len(retained) == counts["retained"]

    def test_tampered_output_detected(self, data_dir, tmp_path, capsys):
        out = tmp_path / "out"
        assert run("ingest", "--data-dir", data_dir, "--out", out) == 0
        with open(out / "corpus_validated.csv", "a", encoding="utf-8") as fh:
            fh.write("tampered\n")
        assert run("score", "--data-dir", data_dir, "--out", out) == 1
        assert "stale intermediate corpus_validated.csv" in capsys.readouterr().err


class TestErrors:
    def test_unknown_institution_one_line_error(self, data_dir, tmp_path, capsys):
        out = tmp_path / "out"
        code = run("select", "--data-dir", data_dir, "--out", out,
                   "--institution", "NOPE")
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("error: ")
        assert len(err.strip().splitlines()) == 1
        # no partial outputs
        assert not out.exists() or not any(out.iterdir())

    def test_bad_window(self, data_dir, tmp_path, capsys):
        code = run("ingest", "--data-dir", data_dir, "--out", tmp_path / "o",
                   "--window", "2004-2006")
        assert code == 1
        assert "bad --window" in capsys.readouterr().err

    def test_missing_required_file(self, tmp_path, capsys):
        code = run("ingest", "--data-dir", tmp_path, "--out", tmp_path / "o")
        assert code == 1
        assert "missing required file" in capsys.readouterr().err


class TestAudit:
    def portfolio_ids(self, data_dir, institution="INST01"):
        data = load_data_dir(data_dir)
        return sorted(p.pub_id for p in data.corpus.publications
                      if institution in p.institution_ids), data

    def test_top_half_submission_scores_zero(self, data_dir, tmp_path):
        ids, data = self.portfolio_ids(data_dir)
        from selecta.metrics import IfTable
        from selecta.reporting import audit_metric_values

        scores = score_corpus(data.corpus)
        publications = data.corpus.publication_index()
        values = audit_metric_values(
            "air", {p: publications[p] for p in ids}, scores, IfTable(data.corpus.journals))
        ranked = sorted(ids, key=lambda p: -values[p])
        top_half = ranked[: len(ranked) // 2]
        submitted = write_csv(tmp_path / "submitted.csv", ["pub_id"],
                              [[p] for p in top_half])
        out = tmp_path / "audit_out"
        assert run("audit", "--data-dir", data_dir, "--out", out,
                   "--institution", "INST01", "--metric", "air",
                   "--submitted", submitted) == 0
        doc = json.loads((out / "audit.json").read_text())
        assert doc["below_median_fraction"] == 0.0

    def test_not_a_subset_errors(self, data_dir, tmp_path, capsys):
        submitted = write_csv(tmp_path / "bad.csv", ["pub_id"], [["NOT_THERE"]])
        code = run("audit", "--data-dir", data_dir, "--out", tmp_path / "o",
                   "--institution", "INST01", "--submitted", submitted)
        assert code == 1
        assert "not a subset" in capsys.readouterr().err

    def test_ud_scoped_audit(self, data_dir, tmp_path):
        data = load_data_dir(data_dir)
        pools = {p.ud_code: p for p in build_pools(data.corpus, data.mapping, "INST01")}
        ud = next(ud for ud, p in sorted(pools.items()) if len(p) >= 4)
        member = pools[ud].pub_ids[0]
        submitted = write_csv(tmp_path / "one.csv", ["pub_id"], [[member]])
        out = tmp_path / "audit_ud"
        assert run("audit", "--data-dir", data_dir, "--out", out,
                   "--institution", "INST01", "--ud", ud, "--metric", "aii",
                   "--submitted", submitted) == 0
        doc = json.loads((out / "audit.json").read_text())
        assert doc["ud_code"] == ud
        assert 0.0 <= doc["below_median_fraction"] <= 1.0


class TestReportContent:
    def test_table2_share_and_ratio_columns(self, data_dir, tmp_path):
        out = tmp_path / "out"
        run_pipeline(data_dir, out)
        lines = (out / "report_table2.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0].split(",")[0] == "ud_code"
        total = lines[-1].split(",")
        assert total[0] == "total"
        selection = json.loads((out / "selection.json").read_text())
        assert int(total[2]) == selection["quota_plan"]["global_quota"]

    def test_structured_format_writes_summary_only(self, data_dir, tmp_path):
        out = tmp_path / "out"
        assert run("ingest", "--data-dir", data_dir, "--out", out) == 0
        assert run("score", "--data-dir", data_dir, "--out", out) == 0
        assert run("select", "--data-dir", data_dir, "--out", out,
                   "--institution", "INST01") == 0
        assert run("report", "--data-dir", data_dir, "--out", out,
                   "--format", "structured") == 0
        assert (out / "report_summary.json").exists()
        assert not (out / "report_table2.csv").exists()

    def test_table7_only_with_compare(self, data_dir, tmp_path):
        out = tmp_path / "out"
        assert run("ingest", "--data-dir", data_dir, "--out", out) == 0
        assert run("score", "--data-dir", data_dir, "--out", out) == 0
        assert run("select", "--data-dir", data_dir, "--out", out,
                   "--institution", "INST01") == 0
        assert run("report", "--data-dir", data_dir, "--out", out) == 0
        assert not (out / "report_table7.csv").exists()
