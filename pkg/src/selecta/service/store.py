"""Durable session state: human-readable JSON documents, atomic writes.

One file per session under the store root. Saves go through a temp file and
``os.replace`` so a crash between mutations never leaves a corrupt document.
A per-session lock serializes writers in-process; the session version gives
optimistic concurrency across clients.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from ..selector import PortfolioEntry, QuotaPlan, SelectionSession


class SessionNotFound(Exception):
    pass


class VersionConflict(Exception):
    def __init__(self, current_version: int):
        super().__init__(f"stale version, current is {current_version}")
        self.current_version = current_version


def session_to_dict(session: SelectionSession) -> dict:
    return {
        "session_id": session.session_id,
        "institution_id": session.institution_id,
        "quota_plan": {
            "institution_id": session.quota_plan.institution_id,
            "ratio": session.quota_plan.ratio,
            "global_quota": session.quota_plan.global_quota,
            "per_ud": {str(ud): q for ud, q in sorted(session.quota_plan.per_ud.items())},
        },
        "weights": list(session.weights),
        "manual_in": {str(ud): sorted(ids) for ud, ids in sorted(session.manual_in.items())},
        "manual_out": {str(ud): sorted(ids) for ud, ids in sorted(session.manual_out.items())},
        "finalized": None if session.finalized is None else [
            {
                "ud_code": e.ud_code, "rank": e.rank, "pub_id": e.pub_id,
                "jir": e.jir, "air": e.air, "aii": e.aii,
                "in_intersection": e.in_intersection, "manual": e.manual,
            }
            for e in session.finalized
        ],
        "version": session.version,
        "corpus_digest": session.corpus_digest,
    }


def session_from_dict(doc: dict) -> SelectionSession:
    plan_doc = doc["quota_plan"]
    plan = QuotaPlan(
        institution_id=plan_doc["institution_id"],
        ratio=plan_doc["ratio"],
        global_quota=plan_doc["global_quota"],
        per_ud={int(ud): q for ud, q in plan_doc["per_ud"].items()},
    )
    finalized = doc.get("finalized")
    return SelectionSession(
        session_id=doc["session_id"],
        institution_id=doc["institution_id"],
        quota_plan=plan,
        weights=tuple(doc["weights"]),
        manual_in={int(ud): frozenset(ids) for ud, ids in doc["manual_in"].items()},
        manual_out={int(ud): frozenset(ids) for ud, ids in doc["manual_out"].items()},
        finalized=None if finalized is None else tuple(
            PortfolioEntry(
                ud_code=e["ud_code"], rank=e["rank"], pub_id=e["pub_id"],
                jir=e["jir"], air=e["air"], aii=e["aii"],
                in_intersection=e["in_intersection"], manual=e["manual"],
            )
            for e in finalized
        ),
        version=doc["version"],
        corpus_digest=doc["corpus_digest"],
    )


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.json"

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).exists()

    def load(self, session_id: str) -> SelectionSession:
        path = self._path(session_id)
        if not path.exists():
            raise SessionNotFound(session_id)
        return session_from_dict(json.loads(path.read_text(encoding="utf-8")))

    def save(self, session: SelectionSession) -> None:
        """Atomic write (temp file + rename in the same directory)."""
        path = self._path(session.session_id)
        payload = json.dumps(session_to_dict(session), indent=2, sort_keys=True) + "\n"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(payload, encoding="utf-8")
        os.replace(tmp, path)

    def save_versioned(self, session: SelectionSession, expected_version: int) -> None:
        """Persist a mutation only if the stored version is still ``expected_version``."""
        stored = self.load(session.session_id)
        if stored.version != expected_version:
            raise VersionConflict(stored.version)
        self.save(session)

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))
