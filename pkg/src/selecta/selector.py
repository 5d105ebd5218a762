"""Submission quotas, indicator rankings and the recursive intersection selection.

The selection per discipline works on three descending rankings (journal
impact ranking, article impact ranking, article impact index). A depth ``k``
grows from 0 one step at a time, simultaneously for the three lists; the
top-k set of a ranking also includes everything tied with the k-th value, so
the three sets need not have equal sizes. The smallest ``k`` whose three-way
intersection reaches the discipline quota wins; the union of the three sets
at that depth is the candidate shortlist handed to the committee.

Quotas follow the one-product-per-four-researchers rule (ratio 0.25 of FTE,
rounded up) with per-discipline defaults apportioned by largest remainder;
committees may move quota between disciplines as long as the global total is
preserved.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import ceil, fsum
from typing import Hashable, Mapping, Sequence, TypeVar

from .corpus import StaffRecord
from .metrics import IndicatorScores, percentile_rank
from .taxonomy import UdPool

logger = logging.getLogger(__name__)

INDICATORS = ("jir", "air", "aii")

K = TypeVar("K", bound=Hashable)


class SelectionError(Exception):
    pass


class ValidationFailure(Exception):
    """Invalid committee edit; ``reasons`` lists field-level problems."""

    def __init__(self, reasons: Sequence[str]):
        super().__init__("; ".join(reasons))
        self.reasons = list(reasons)


@dataclass(frozen=True)
class QuotaPlan:
    institution_id: str
    ratio: float
    global_quota: int
    per_ud: Mapping[int, int]

    def __post_init__(self) -> None:
        if sum(self.per_ud.values()) != self.global_quota:
            raise SelectionError(
                f"per-UD quotas sum to {sum(self.per_ud.values())}, "
                f"expected global quota {self.global_quota}"
            )
        if any(q < 0 for q in self.per_ud.values()):
            raise SelectionError("negative per-UD quota")


def largest_remainder(weights: Mapping[K, Fraction], units: int) -> dict[K, int]:
    """Apportion ``units`` integer units proportionally to ``weights``.

    Exact fraction arithmetic; leftovers go to the largest remainders, ties
    broken by larger weight, then by key order.
    """
    if units < 0:
        raise ValueError("units must be non-negative")
    total = sum(weights.values(), start=Fraction(0))
    keys = sorted(weights)
    if total == 0:
        return {k: 0 for k in keys}
    shares = {k: Fraction(units) * weights[k] / total for k in keys}
    base = {k: int(shares[k]) for k in keys}  # int() truncates; shares are >= 0
    leftover = units - sum(base.values())
    order = sorted(keys, key=lambda k: (-(shares[k] - base[k]), -weights[k], k))
    for k in order[:leftover]:
        base[k] += 1
    return base


def compute_quotas(
    staff: Sequence[StaffRecord], ratio: float = 0.25, institution_id: str | None = None
) -> QuotaPlan:
    """Quota plan from a staff roster: global quota is ceil(total FTE x ratio),
    per-UD defaults apportioned over FTE shares by largest remainder.

    Remainder ties go to the larger FTE, then the lower UD code. FTE sums near
    an integer (within 1e-9) are treated as exact so float noise cannot bump
    the ceiling.
    """
    if ratio <= 0:
        raise SelectionError(f"ratio must be positive, got {ratio}")
    if not staff:
        raise SelectionError("empty staff roster")
    institutions = {r.institution_id for r in staff}
    if institution_id is None:
        if len(institutions) != 1:
            raise SelectionError(f"staff roster spans institutions {sorted(institutions)}")
        institution_id = next(iter(institutions))
    elif institutions != {institution_id}:
        raise SelectionError(f"staff roster does not match institution {institution_id!r}")

    fte_by_ud: dict[int, Fraction] = {}
    for rec in staff:
        fte_by_ud[rec.ud_code] = fte_by_ud.get(rec.ud_code, Fraction(0)) + Fraction(rec.fte)
    total_fte = sum(fte_by_ud.values(), start=Fraction(0))
    if total_fte == 0:
        logger.warning("institution %s: all-zero FTE roster, quota plan is all zero",
                       institution_id)
        return QuotaPlan(institution_id, ratio, 0, {ud: 0 for ud in fte_by_ud})

    target = float(total_fte) * ratio
    nearest = round(target)
    global_quota = nearest if abs(target - nearest) < 1e-9 else ceil(target)
    per_ud = largest_remainder(fte_by_ud, global_quota)
    return QuotaPlan(institution_id, ratio, global_quota, per_ud)


@dataclass(frozen=True)
class RankEntry:
    pub_id: str
    value: float


@dataclass(frozen=True)
class Ranking:
    """Descending ranking with tie groups.

    Entries are sorted by value descending, pub_id ascending within equal
    values; the pub_id order inside a tie group is presentational only, the
    grouping is what carries meaning. ``excluded`` lists pool members missing
    the indicator (only possible for the journal ranking); ``flagged`` lists
    ranked members whose value had to substitute a missing term (composite
    ranking with a positive journal weight).
    """

    indicator: str
    entries: tuple[RankEntry, ...]
    excluded: tuple[str, ...] = ()
    flagged: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def positions(self) -> dict[str, int]:
        return {e.pub_id: i for i, e in enumerate(self.entries)}


def _indicator_value(scores: IndicatorScores, indicator: str) -> float | None:
    if indicator == "jir":
        return scores.jir
    if indicator == "air":
        return scores.air
    if indicator == "aii":
        return scores.aii
    raise SelectionError(f"unknown indicator {indicator!r}")


def rank_pool(
    pool: UdPool, scores: Mapping[str, IndicatorScores], indicator: str
) -> Ranking:
    """Rank a pool by one indicator; members lacking it are excluded and flagged."""
    entries: list[RankEntry] = []
    excluded: list[str] = []
    for pub_id in pool.pub_ids:
        try:
            s = scores[pub_id]
        except KeyError:
            raise SelectionError(f"pool member {pub_id} has no scores") from None
        value = _indicator_value(s, indicator)
        if value is None:
            excluded.append(pub_id)
        else:
            entries.append(RankEntry(pub_id, value))
    entries.sort(key=lambda e: (-e.value, e.pub_id))
    return Ranking(indicator=indicator, entries=tuple(entries), excluded=tuple(excluded))


def top_set(ranking: Ranking, k: int) -> frozenset[str]:
    """First k entries plus everything tied with the k-th value.

    k = 0 is the empty set; k beyond the ranking length returns all entries.
    """
    if k < 0:
        raise SelectionError(f"k must be non-negative, got {k}")
    return frozenset(e.pub_id for e in ranking.entries[: _coverage(ranking.entries, k)])


def _coverage(entries: Sequence[RankEntry], k: int) -> int:
    """Length of the tie-inclusive top-k prefix."""
    if k <= 0:
        return 0
    if k >= len(entries):
        return len(entries)
    threshold = entries[k - 1].value
    j = k
    while j < len(entries) and entries[j].value == threshold:
        j += 1
    return j


@dataclass(frozen=True)
class SelectionResult:
    ud_code: int
    k: int
    set_jir: frozenset[str]
    set_air: frozenset[str]
    set_aii: frozenset[str]
    intersection: frozenset[str]
    candidates: frozenset[str]
    shortfall: bool

    def sets_by_indicator(self) -> dict[str, frozenset[str]]:
        return {"jir": self.set_jir, "air": self.set_air, "aii": self.set_aii}


def recursive_select(
    pool: UdPool, scores: Mapping[str, IndicatorScores], quota: int
) -> SelectionResult:
    """Grow k from 0 until the three top-k sets intersect in at least ``quota``
    publications; return the sets, intersection and candidate union at that k.

    If no depth up to the pool size reaches the quota (small pool, or journal
    rankings unavailable for too many members), the full-depth result is
    returned with ``shortfall`` set.
    """
    if quota < 0:
        raise SelectionError(f"quota must be non-negative, got {quota}")
    rankings = {ind: rank_pool(pool, scores, ind) for ind in INDICATORS}
    n = len(pool.pub_ids)

    covered = {ind: 0 for ind in INDICATORS}
    sets: dict[str, set[str]] = {ind: set() for ind in INDICATORS}
    membership: dict[str, int] = {}
    intersection_size = 0

    def result(k: int, shortfall: bool) -> SelectionResult:
        inter = frozenset(p for p, c in membership.items() if c == 3)
        union = frozenset(membership)
        return SelectionResult(
            ud_code=pool.ud_code,
            k=k,
            set_jir=frozenset(sets["jir"]),
            set_air=frozenset(sets["air"]),
            set_aii=frozenset(sets["aii"]),
            intersection=inter,
            candidates=union,
            shortfall=shortfall,
        )

    for k in range(0, n + 1):
        for ind in INDICATORS:
            entries = rankings[ind].entries
            target = _coverage(entries, k)
            while covered[ind] < target:
                pub_id = entries[covered[ind]].pub_id
                sets[ind].add(pub_id)
                count = membership.get(pub_id, 0) + 1
                membership[pub_id] = count
                if count == 3:
                    intersection_size += 1
                covered[ind] += 1
        if intersection_size >= quota:
            return result(k, shortfall=False)
    return result(n, shortfall=True)


def composite_rank(
    pool: UdPool,
    scores: Mapping[str, IndicatorScores],
    weights: tuple[float, float, float],
) -> Ranking:
    """Weighted blend of the three indicators on a common 0-100 scale.

    The impact index enters as its percentile within the pool, so all three
    terms are comparable. A member without a journal ranking contributes 0 to
    that term and is flagged when the journal weight is positive.
    """
    w_jir, w_air, w_aii = weights
    if min(weights) < 0:
        raise SelectionError(f"negative weight in {weights}")
    if abs(fsum(weights) - 1.0) > 1e-6:
        raise SelectionError(f"weights must sum to 1, got {weights}")

    pool_scores = []
    for pub_id in pool.pub_ids:
        try:
            pool_scores.append(scores[pub_id])
        except KeyError:
            raise SelectionError(f"pool member {pub_id} has no scores") from None
    aii_values = [s.aii for s in pool_scores]

    entries: list[RankEntry] = []
    flagged: list[str] = []
    for s in pool_scores:
        if s.jir is None:
            jir_term = 0.0
            if w_jir > 0:
                flagged.append(s.pub_id)
        else:
            jir_term = s.jir
        aii_pctl = percentile_rank(s.aii, aii_values)
        value = w_jir * jir_term + w_air * s.air + w_aii * aii_pctl
        entries.append(RankEntry(s.pub_id, value))
    entries.sort(key=lambda e: (-e.value, e.pub_id))
    return Ranking(
        indicator="composite", entries=tuple(entries), flagged=tuple(sorted(flagged))
    )


DEFAULT_WEIGHTS: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)


@dataclass(frozen=True)
class PortfolioEntry:
    ud_code: int
    rank: int
    pub_id: str
    jir: float | None
    air: float
    aii: float
    in_intersection: bool
    manual: bool


@dataclass(frozen=True)
class SelectionSession:
    """Mutable committee state, persisted between edits.

    Manual picks are scoped to a discipline so that a multi-discipline
    publication is submitted under exactly one of them. ``version`` increases
    by one per accepted mutation and gates concurrent writers.
    """

    session_id: str
    institution_id: str
    quota_plan: QuotaPlan
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS
    manual_in: Mapping[int, frozenset[str]] = field(default_factory=dict)
    manual_out: Mapping[int, frozenset[str]] = field(default_factory=dict)
    finalized: tuple[PortfolioEntry, ...] | None = None
    version: int = 1
    corpus_digest: str = ""

    def manual_in_for(self, ud: int) -> frozenset[str]:
        return self.manual_in.get(ud, frozenset())

    def manual_out_for(self, ud: int) -> frozenset[str]:
        return self.manual_out.get(ud, frozenset())


@dataclass(frozen=True)
class UdPicks:
    ud_code: int
    picks: tuple[tuple[str, str], ...]  # (pub_id, "default" | "manual") in composite order
    deficit: int

    def pub_ids(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.picks)


def validate_manual_sets(
    session: SelectionSession,
    results: Mapping[int, SelectionResult],
) -> list[str]:
    """Field-level problems with the session's manual picks (empty = valid)."""
    reasons: list[str] = []
    plan = session.quota_plan
    for ud in sorted(set(session.manual_in) | set(session.manual_out)):
        if ud not in plan.per_ud:
            reasons.append(f"manual picks reference unknown UD {ud}")
            continue
        overlap = session.manual_in_for(ud) & session.manual_out_for(ud)
        if overlap:
            reasons.append(
                f"UD {ud}: publications both picked and excluded: {sorted(overlap)}"
            )
        result = results.get(ud)
        candidates = result.candidates if result else frozenset()
        strangers = session.manual_in_for(ud) - candidates
        if strangers:
            reasons.append(f"UD {ud}: manual picks outside candidate set: {sorted(strangers)}")
        if len(session.manual_in_for(ud)) > plan.per_ud[ud]:
            reasons.append(
                f"UD {ud}: {len(session.manual_in_for(ud))} manual picks exceed quota "
                f"{plan.per_ud[ud]}"
            )
    seen: dict[str, int] = {}
    for ud in sorted(session.manual_in):
        for pub_id in sorted(session.manual_in_for(ud)):
            if pub_id in seen:
                reasons.append(
                    f"publication {pub_id} manually picked in both UD {seen[pub_id]} and UD {ud}"
                )
            else:
                seen[pub_id] = ud
    return reasons


def current_picks(
    session: SelectionSession,
    results: Mapping[int, SelectionResult],
    pools: Mapping[int, UdPool],
    scores: Mapping[str, IndicatorScores],
) -> dict[int, UdPicks]:
    """Per-UD picks implied by the session: manual picks first, then the top
    of the intersection under the composite ranking.

    UDs are processed in ascending code order; a multi-UD publication already
    taken by an earlier discipline is skipped and the next-ranked candidate
    promoted. Slots that cannot be filled from the intersection are reported
    as a deficit (the committee must cover them with manual picks).
    """
    reasons = validate_manual_sets(session, results)
    if reasons:
        raise ValidationFailure(reasons)

    taken: set[str] = set()
    for ud in session.manual_in:
        taken |= session.manual_in_for(ud)

    picks_by_ud: dict[int, UdPicks] = {}
    for ud in sorted(session.quota_plan.per_ud):
        quota = session.quota_plan.per_ud[ud]
        result = results[ud]
        pool = pools[ud]
        composite = composite_rank(pool, scores, session.weights)
        position = composite.positions()

        manual = sorted(session.manual_in_for(ud), key=lambda p: position[p])
        chosen: list[tuple[str, str]] = [(p, "manual") for p in manual[:quota]]
        chosen_ids = {p for p, _ in chosen}

        blocked = session.manual_out_for(ud)
        for entry in composite.entries:
            if len(chosen) >= quota:
                break
            pid = entry.pub_id
            if pid in chosen_ids or pid in blocked:
                continue
            if pid not in result.intersection:
                continue
            if pid in taken:
                continue
            chosen.append((pid, "default"))
            chosen_ids.add(pid)
            taken.add(pid)

        chosen.sort(key=lambda item: position[item[0]])
        picks_by_ud[ud] = UdPicks(
            ud_code=ud,
            picks=tuple(chosen),
            deficit=quota - len(chosen),
        )
    return picks_by_ud


def finalize(
    session: SelectionSession,
    results: Mapping[int, SelectionResult],
    pools: Mapping[int, UdPool],
    scores: Mapping[str, IndicatorScores],
) -> tuple[PortfolioEntry, ...]:
    """Freeze the portfolio: exactly the per-UD quota everywhere, no
    publication submitted under two disciplines, total equal to the global
    quota. Unfilled quotas abort with the list of deficits."""
    picks = current_picks(session, results, pools, scores)
    deficits = {ud: p.deficit for ud, p in picks.items() if p.deficit > 0}
    if deficits:
        raise ValidationFailure(
            [f"UD {ud}: quota short by {short}" for ud, short in sorted(deficits.items())]
        )
    entries: list[PortfolioEntry] = []
    for ud, ud_picks in sorted(picks.items()):
        result = results[ud]
        for rank, (pub_id, source) in enumerate(ud_picks.picks, start=1):
            s = scores[pub_id]
            entries.append(
                PortfolioEntry(
                    ud_code=ud,
                    rank=rank,
                    pub_id=pub_id,
                    jir=s.jir,
                    air=s.air,
                    aii=s.aii,
                    in_intersection=pub_id in result.intersection,
                    manual=source == "manual",
                )
            )
    total = len(entries)
    if total != session.quota_plan.global_quota:
        raise SelectionError(
            f"portfolio has {total} entries, expected {session.quota_plan.global_quota}"
        )
    return tuple(entries)


def apply_quota_edit(
    plan: QuotaPlan, edits: Mapping[int, int], pool_sizes: Mapping[int, int]
) -> QuotaPlan:
    """Reallocate per-UD quotas; the edited plan must keep the global total
    and stay within [0, pool size] for every discipline."""
    reasons: list[str] = []
    per_ud = dict(plan.per_ud)
    for ud, value in edits.items():
        if ud not in per_ud:
            reasons.append(f"quotas.{ud}: unknown UD")
            continue
        if value < 0:
            reasons.append(f"quotas.{ud}: negative quota {value}")
            continue
        limit = pool_sizes.get(ud, 0)
        if value > limit:
            reasons.append(f"quotas.{ud}: quota {value} exceeds pool size {limit}")
            continue
        per_ud[ud] = value
    if not reasons and sum(per_ud.values()) != plan.global_quota:
        reasons.append(
            f"quotas: per-UD sum {sum(per_ud.values())} must equal global quota "
            f"{plan.global_quota}"
        )
    if reasons:
        raise ValidationFailure(reasons)
    return replace(plan, per_ud=per_ud)


def normalize_weights(weights: Sequence[float]) -> tuple[float, float, float]:
    if len(weights) != 3:
        raise ValidationFailure(["weights: expected exactly three values"])
    if min(weights) < 0:
        raise ValidationFailure([f"weights: negative value in {list(weights)}"])
    total = fsum(weights)
    if total <= 0:
        raise ValidationFailure(["weights: sum must be positive"])
    return (weights[0] / total, weights[1] / total, weights[2] / total)
