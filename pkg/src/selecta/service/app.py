"""FastAPI application: committee sessions over the pre-scored corpus.

The corpus is parsed and scored once at startup; sessions reference that
snapshot by digest, so swapping the corpus under a live session store
invalidates old sessions explicitly (410) instead of silently re-scoring.
All mutation goes through the session version gate; reads are side-effect
free.
"""

from __future__ import annotations

import csv
import json
import os
import uuid
from dataclasses import replace
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from .. import reporting
from ..metrics import IfTable, IndicatorScores, score_corpus
from ..pipeline import LoadedData, load_data_dir
from ..selector import (DEFAULT_WEIGHTS, SelectionResult, SelectionSession,
                        UdPicks, ValidationFailure, apply_quota_edit,
                        composite_rank, compute_quotas, current_picks,
                        finalize, normalize_weights, recursive_select)
from ..taxonomy import UdPool, build_pools
from .schemas import (CandidateRow, CreateSessionRequest, ExportResponse,
                      InstitutionInfo, InstitutionList, PatchRequest,
                      PortfolioRow, ReportDoc, SessionView, UdBlock)
from .store import SessionNotFound, SessionStore, VersionConflict

PORTFOLIO_HEADER = ["ud_code", "rank", "pub_id", "jir", "air", "aii",
                    "in_intersection", "manual"]

REPORT_TABLES = ("table2", "table3", "table4", "table5", "table6")


class ServerState:
    """Immutable scored corpus plus the mutable session store."""

    def __init__(self, data_dir: Path, data: LoadedData):
        self.data_dir = data_dir
        self.corpus = data.corpus
        self.mapping = data.mapping
        self.window = data.window
        self.digest = data.digest
        self.scores: dict[str, IndicatorScores] = score_corpus(data.corpus)
        self.publications = data.corpus.publication_index()
        self.if_table = IfTable(data.corpus.journals)
        self.store = SessionStore(data_dir / "sessions")
        self.export_root = data_dir / "exports"
        self._pools: dict[str, dict[int, UdPool]] = {}

    @classmethod
    def load(cls, data_dir: str | Path) -> "ServerState":
        data_dir = Path(data_dir)
        return cls(data_dir, load_data_dir(data_dir))

    def pools_for(self, institution_id: str) -> dict[int, UdPool]:
        if institution_id not in self._pools:
            self._pools[institution_id] = {
                p.ud_code: p for p in build_pools(self.corpus, self.mapping, institution_id)
            }
        return self._pools[institution_id]

    def fte_by_ud(self, institution_id: str) -> dict[int, float]:
        out: dict[int, float] = {}
        for rec in self.corpus.staff_for(institution_id):
            out[rec.ud_code] = out.get(rec.ud_code, 0.0) + rec.fte
        return out

    def results_for(self, session: SelectionSession) -> dict[int, SelectionResult]:
        pools = self.pools_for(session.institution_id)
        return {
            ud: recursive_select(pools[ud], self.scores, quota)
            for ud, quota in sorted(session.quota_plan.per_ud.items())
        }


def _ud_block(
    state: ServerState,
    session: SelectionSession,
    ud: int,
    result: SelectionResult,
    pool: UdPool,
    picks: UdPicks,
) -> UdBlock:
    composite = composite_rank(pool, state.scores, session.weights)
    value_of = {e.pub_id: e.value for e in composite.entries}
    picked = dict(picks.picks)
    rows = []
    for pub_id in sorted(result.candidates, key=lambda p: (-value_of[p], p)):
        pub = state.publications[pub_id]
        s = state.scores[pub_id]
        rows.append(
            CandidateRow(
                pub_id=pub_id,
                title=pub.title,
                year=pub.year,
                sector_code=pub.sector_code,
                jir=s.jir,
                air=s.air,
                aii=s.aii,
                composite=value_of[pub_id],
                in_intersection=pub_id in result.intersection,
                picked=pub_id in picked,
                pick_source=picked.get(pub_id),
            )
        )
    return UdBlock(
        ud_code=ud,
        quota=session.quota_plan.per_ud[ud],
        pool_size=len(pool),
        k=result.k,
        shortfall=result.shortfall,
        set_sizes={"jir": len(result.set_jir), "air": len(result.set_air),
                   "aii": len(result.set_aii)},
        intersection_size=len(result.intersection),
        candidate_count=len(result.candidates),
        deficit=picks.deficit,
        candidates=rows,
    )


def _session_view(state: ServerState, session: SelectionSession) -> SessionView:
    pools = state.pools_for(session.institution_id)
    results = state.results_for(session)
    picks = current_picks(session, results, pools, state.scores)
    summary = reporting.build_summary(
        session.quota_plan, session.weights, pools, results, state.scores,
        state.publications, state.fte_by_ud(session.institution_id),
    )
    return SessionView(
        session_id=session.session_id,
        institution_id=session.institution_id,
        ratio=session.quota_plan.ratio,
        global_quota=session.quota_plan.global_quota,
        per_ud=dict(sorted(session.quota_plan.per_ud.items())),
        weights=session.weights,
        version=session.version,
        finalized=session.finalized is not None,
        manual_in={ud: sorted(ids) for ud, ids in sorted(session.manual_in.items())},
        manual_out={ud: sorted(ids) for ud, ids in sorted(session.manual_out.items())},
        uds=[
            _ud_block(state, session, ud, results[ud], pools[ud], picks[ud])
            for ud in sorted(results)
        ],
        summary=summary,
    )


def _report_doc(state: ServerState, session: SelectionSession, table: str) -> ReportDoc:
    summary = _session_view(state, session).summary
    rows: list[dict] = []
    if table == "table2":
        for ud_doc in summary["ud"]:
            rows.append({k: ud_doc[k] for k in (
                "ud_code", "fte", "quota", "production", "quota_share_pct",
                "candidates", "candidate_share_pct", "candidates_per_quota")})
        totals = dict(summary["totals"])
        totals["ud_code"] = "total"
        rows.append(totals)
    elif table == "table3":
        for ud_doc in summary["ud"]:
            rows.append({
                "ud_code": ud_doc["ud_code"], "pool_size": ud_doc["production"],
                "k": ud_doc["k"], **{f"set_{i}": ud_doc["set_sizes"][i]
                                     for i in ("jir", "air", "aii")},
                "intersection": ud_doc["intersection_size"],
                "shortfall": ud_doc["shortfall"],
            })
    elif table == "table4":
        for ud_doc in summary["ud"]:
            for scope in ("candidates", "intersection"):
                rows.append({"ud_code": ud_doc["ud_code"], "scope": scope,
                             **ud_doc["averages"][scope]})
    elif table == "table5":
        for ud_doc in summary["ud"]:
            for year_row in ud_doc["years"]:
                rows.append({"ud_code": ud_doc["ud_code"], **year_row})
    elif table == "table6":
        for ud_doc in summary["ud"]:
            for sector_row in ud_doc["sectors"]:
                rows.append({"ud_code": ud_doc["ud_code"],
                             "pearson_r": ud_doc["pearson_r"], **sector_row})
    else:
        raise HTTPException(status_code=404, detail=f"unknown report {table!r}")
    return ReportDoc(table=table, rows=rows)


def _write_portfolio_csv(path: Path, entries) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PORTFOLIO_HEADER)
        for e in entries:
            writer.writerow([
                e.ud_code, e.rank, e.pub_id,
                "" if e.jir is None else f"{e.jir:.6f}",
                f"{e.air:.6f}", f"{e.aii:.6f}",
                1 if e.in_intersection else 0,
                1 if e.manual else 0,
            ])


def export_manifest(session: SelectionSession,
                    results: dict[int, SelectionResult], digest: str) -> dict:
    return {
        "session_id": session.session_id,
        "institution_id": session.institution_id,
        "ratio": session.quota_plan.ratio,
        "global_quota": session.quota_plan.global_quota,
        "per_ud": {str(ud): q for ud, q in sorted(session.quota_plan.per_ud.items())},
        "weights": list(session.weights),
        "k_per_ud": {str(ud): r.k for ud, r in sorted(results.items())},
        "shortfall": {str(ud): r.shortfall for ud, r in sorted(results.items())},
        "corpus_digest": digest,
    }


def create_app(data_dir: str | Path | None = None) -> FastAPI:
    if data_dir is None:
        data_dir = os.environ.get("SELECTA_DATA_DIR")
        if not data_dir:
            raise RuntimeError("SELECTA_DATA_DIR not set and no data_dir given")
    state = ServerState.load(data_dir)

    app = FastAPI(title="selecta", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    app.state.server = state

    def get_session(session_id: str) -> SelectionSession:
        try:
            session = state.store.load(session_id)
        except SessionNotFound:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        if session.corpus_digest != state.digest:
            raise HTTPException(
                status_code=410,
                detail="session was created against a different corpus snapshot",
            )
        return session

    @app.get("/institutions", response_model=InstitutionList)
    def institutions() -> InstitutionList:
        infos = []
        for inst in state.corpus.institutions:
            staff = state.corpus.staff_for(inst.institution_id)
            infos.append(
                InstitutionInfo(
                    institution_id=inst.institution_id,
                    canonical_name=inst.canonical_name,
                    kind=inst.kind,
                    fte_total=sum(r.fte for r in staff),
                    ud_codes=sorted({r.ud_code for r in staff}),
                )
            )
        return InstitutionList(institutions=infos)

    @app.post("/sessions", response_model=SessionView, status_code=201)
    def create_session(request: CreateSessionRequest) -> SessionView:
        roster = {i.institution_id for i in state.corpus.institutions}
        if request.institution_id not in roster:
            raise HTTPException(status_code=404,
                                detail=f"unknown institution {request.institution_id!r}")
        staff = state.corpus.staff_for(request.institution_id)
        if not staff:
            raise HTTPException(status_code=422, detail="no staff roster")
        try:
            plan = compute_quotas(staff, request.ratio)
        except Exception as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        session = SelectionSession(
            session_id=uuid.uuid4().hex[:12],
            institution_id=request.institution_id,
            quota_plan=plan,
            weights=DEFAULT_WEIGHTS,
            corpus_digest=state.digest,
        )
        view = _session_view(state, session)  # validates before persisting
        state.store.save(session)
        return view

    @app.get("/sessions/{session_id}", response_model=SessionView)
    def session_view(session_id: str) -> SessionView:
        return _session_view(state, get_session(session_id))

    @app.patch("/sessions/{session_id}", response_model=SessionView)
    def mutate_session(session_id: str, request: PatchRequest) -> SessionView:
        with state.store.lock(session_id):
            session = get_session(session_id)
            if session.finalized is not None:
                raise HTTPException(status_code=409, detail="session is finalized")
            if request.version != session.version:
                raise HTTPException(
                    status_code=409,
                    detail={"error": "version conflict",
                            "current_version": session.version},
                )
            patch = request.patch
            try:
                plan = session.quota_plan
                if patch.quotas is not None:
                    pools = state.pools_for(session.institution_id)
                    plan = apply_quota_edit(
                        plan, patch.quotas, {ud: len(p) for ud, p in pools.items()}
                    )
                weights = session.weights
                if patch.weights is not None:
                    weights = normalize_weights(patch.weights)
                manual_in = session.manual_in
                if patch.manual_in is not None:
                    manual_in = {int(ud): frozenset(ids)
                                 for ud, ids in patch.manual_in.items() if ids}
                manual_out = session.manual_out
                if patch.manual_out is not None:
                    manual_out = {int(ud): frozenset(ids)
                                  for ud, ids in patch.manual_out.items() if ids}
                updated = replace(
                    session, quota_plan=plan, weights=weights,
                    manual_in=manual_in, manual_out=manual_out,
                    version=session.version + 1,
                )
                view = _session_view(state, updated)  # runs manual-set validation
            except ValidationFailure as exc:
                raise HTTPException(
                    status_code=422,
                    detail={"error": "invalid patch", "reasons": exc.reasons},
                )
            try:
                state.store.save_versioned(updated, expected_version=request.version)
            except VersionConflict as exc:
                raise HTTPException(
                    status_code=409,
                    detail={"error": "version conflict",
                            "current_version": exc.current_version},
                )
            return view

    @app.get("/sessions/{session_id}/reports/{table}", response_model=ReportDoc)
    def report(session_id: str, table: str) -> ReportDoc:
        if table not in REPORT_TABLES:
            raise HTTPException(status_code=404, detail=f"unknown report {table!r}")
        return _report_doc(state, get_session(session_id), table)

    @app.post("/sessions/{session_id}/export", response_model=ExportResponse)
    def export_session(session_id: str) -> ExportResponse:
        with state.store.lock(session_id):
            session = get_session(session_id)
            results = state.results_for(session)
            if session.finalized is None:
                pools = state.pools_for(session.institution_id)
                try:
                    entries = finalize(session, results, pools, state.scores)
                except ValidationFailure as exc:
                    raise HTTPException(
                        status_code=422,
                        detail={"error": "cannot finalize", "reasons": exc.reasons},
                    )
                session = replace(session, finalized=entries,
                                  version=session.version + 1)
                state.store.save(session)
            entries = session.finalized
            export_dir = state.export_root / session.session_id
            export_dir.mkdir(parents=True, exist_ok=True)
            portfolio_path = export_dir / "portfolio.csv"
            manifest_path = export_dir / "selection_manifest.json"
            _write_portfolio_csv(portfolio_path, entries)
            manifest_path.write_text(
                json.dumps(export_manifest(session, results, state.digest),
                           indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
            return ExportResponse(
                session_id=session.session_id,
                portfolio=[
                    PortfolioRow(
                        ud_code=e.ud_code, rank=e.rank, pub_id=e.pub_id, jir=e.jir,
                        air=e.air, aii=e.aii, in_intersection=e.in_intersection,
                        manual=e.manual,
                    )
                    for e in entries
                ],
                files={"portfolio": str(portfolio_path), "manifest": str(manifest_path)},
            )

    return app
