"""Request/response models for the session API."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class InstitutionInfo(BaseModel):
    institution_id: str
    canonical_name: str
    kind: str
    fte_total: float
    ud_codes: list[int] = Field(default_factory=list,
                                description="Disciplines with staff on roster")


class InstitutionList(BaseModel):
    institutions: list[InstitutionInfo]


class CreateSessionRequest(BaseModel):
    institution_id: str
    ratio: float = 0.25


class CandidateRow(BaseModel):
    pub_id: str
    title: str
    year: int
    sector_code: str
    jir: Optional[float] = None
    air: float
    aii: float
    composite: float
    in_intersection: bool
    picked: bool
    pick_source: Optional[Literal["default", "manual"]] = None


class UdBlock(BaseModel):
    ud_code: int
    quota: int
    pool_size: int
    k: int
    shortfall: bool
    set_sizes: dict[str, int]
    intersection_size: int
    candidate_count: int
    deficit: int
    candidates: list[CandidateRow]


class SessionDescriptor(BaseModel):
    session_id: str
    institution_id: str
    ratio: float
    global_quota: int
    per_ud: dict[int, int]
    weights: tuple[float, float, float]
    version: int
    finalized: bool


class SessionView(SessionDescriptor):
    manual_in: dict[int, list[str]]
    manual_out: dict[int, list[str]]
    uds: list[UdBlock]
    summary: dict


class SessionPatch(BaseModel, extra="forbid"):
    """Partial edits: any provided field replaces the corresponding state.

    ``quotas`` holds new values for the edited disciplines only; the resulting
    per-discipline map must keep the global total. ``manual_in`` and
    ``manual_out`` replace the full manual maps when present.
    """

    quotas: Optional[dict[int, int]] = None
    weights: Optional[tuple[float, float, float]] = None
    manual_in: Optional[dict[int, list[str]]] = None
    manual_out: Optional[dict[int, list[str]]] = None


class PatchRequest(BaseModel, extra="forbid"):
    version: int
    patch: SessionPatch


class ReportDoc(BaseModel):
    table: str
    rows: list[dict]


class PortfolioRow(BaseModel):
    ud_code: int
    rank: int
    pub_id: str
    jir: Optional[float]
    air: float
    aii: float
    in_intersection: bool
    manual: bool


class ExportResponse(BaseModel):
    session_id: str
    portfolio: list[PortfolioRow]
    files: dict[str, str]
