"""Per-unit scores within each group and the group statistics they define.

Scores in a group depend only on outcomes in that group, which keeps every
subgroup test valid when the global test is turned into a closed testing
procedure.
"""

from __future__ import annotations

import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .exceptions import ValidationError
from .study import GroupedStudy, MatchedSet, Survival

WILCOXON = "wilcoxon-signed-rank"
PRENTICE_WILCOXON = "prentice-wilcoxon"
METHODS = (WILCOXON, PRENTICE_WILCOXON)

_ALIASES = {
    "wilcoxon": WILCOXON,
    "signed-rank": WILCOXON,
    WILCOXON: WILCOXON,
    "pw": PRENTICE_WILCOXON,
    "prentice": PRENTICE_WILCOXON,
    PRENTICE_WILCOXON: PRENTICE_WILCOXON,
}


def canonical_method(name: str) -> str:
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise ValidationError(f"unknown scoring method {name!r}; choose from {METHODS}") from None


@dataclass(frozen=True)
class GroupScores:
    """Scores for one group; ``scores[i][j]`` belongs to unit j of set i."""

    key: tuple
    scores: tuple
    treated: tuple
    unit_ids: tuple

    @property
    def n_sets(self) -> int:
        return len(self.scores)

    def statistic(self) -> float:
        return float(sum(q[t] for q, t in zip(self.scores, self.treated)))

    def negated(self) -> "GroupScores":
        return GroupScores(self.key, tuple(-q for q in self.scores), self.treated, self.unit_ids)

    def pair_array(self):
        """``(I, 2)`` array of scores when every set is a pair, else None."""
        if self.scores and all(len(q) == 2 for q in self.scores):
            return np.vstack(self.scores)
        return None


@dataclass(frozen=True)
class ScoreSet:
    method: str
    groups: tuple

    def negated(self) -> "ScoreSet":
        return ScoreSet(self.method, tuple(g.negated() for g in self.groups))


@dataclass(frozen=True)
class GroupStatistics:
    T: np.ndarray
    n_sets: np.ndarray

    @property
    def total(self) -> float:
        return float(self.T.sum())


def _wrap(group, scores) -> GroupScores:
    return GroupScores(
        key=None,
        scores=tuple(np.asarray(q, dtype=float) for q in scores),
        treated=tuple(s.treated_index for s in group),
        unit_ids=tuple(tuple(u.unit_id for u in s.units) for s in group),
    )


def wilcoxon_scores(group: Sequence[MatchedSet]) -> GroupScores:
    """Signed-rank scores for a group of matched pairs.

    The unit with the larger outcome in pair i gets the average rank of
    ``|Y_i|`` among the nonzero differences of the group; its partner gets 0.
    Pairs with zero difference score 0 for both units.
    """
    if not group:
        raise ValidationError("cannot score an empty group")
    diffs = np.empty(len(group))
    for i, s in enumerate(group):
        if s.size != 2:
            raise ValidationError(
                f"signed-rank scores need matched pairs; set {s.set_id!r} has {s.size} units"
            )
        t = s.treated_index
        yt, yc = s.units[t].outcome, s.units[1 - t].outcome
        if isinstance(yt, Survival) or isinstance(yc, Survival):
            raise ValidationError("signed-rank scores need numeric outcomes")
        diffs[i] = float(yt) - float(yc)
    absd = np.abs(diffs)
    nz = absd > 0
    ranks = np.zeros(len(group))
    if nz.any():
        ranks[nz] = rankdata(absd[nz])
    scores = []
    for i, s in enumerate(group):
        t = s.treated_index
        q = np.zeros(2)
        if diffs[i] > 0:
            q[t] = ranks[i]
        elif diffs[i] < 0:
            q[1 - t] = ranks[i]
        scores.append(q)
    return _wrap(group, scores)


def kaplan_meier(times, events):
    """Right-continuous Kaplan-Meier estimate at each observation's own time.

    Deaths at a time are processed before censorings at that time.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    death_times = np.unique(times[events])
    if death_times.size == 0:
        return np.ones_like(times)
    at_risk = np.array([(times >= t).sum() for t in death_times], dtype=float)
    deaths = np.array([(events & (times == t)).sum() for t in death_times], dtype=float)
    surv = np.cumprod(1.0 - deaths / at_risk)
    idx = np.searchsorted(death_times, times, side="right") - 1
    return np.where(idx >= 0, surv[np.maximum(idx, 0)], 1.0)


def prentice_wilcoxon_scores(group: Sequence[MatchedSet]) -> GroupScores:
    """Scores from the Kaplan-Meier estimate pooled over the group.

    A death at t scores ``1 - 2 S(t)`` and a censoring at t scores
    ``1 - S(t)``, with S right-continuous.  Larger scores mean longer survival.
    """
    if not group:
        raise ValidationError("cannot score an empty group")
    times, events = [], []
    for s in group:
        for u in s.units:
            if not isinstance(u.outcome, Survival):
                raise ValidationError("Prentice-Wilcoxon scores need survival outcomes")
            if not u.outcome.time >= 0:
                raise ValidationError(f"unit {u.unit_id!r} has a negative survival time")
            times.append(u.outcome.time)
            events.append(bool(u.outcome.event))
    events = np.array(events)
    surv = kaplan_meier(times, events)
    flat = np.where(events, 1.0 - 2.0 * surv, 1.0 - surv)
    scores, pos = [], 0
    for s in group:
        scores.append(flat[pos:pos + s.size])
        pos += s.size
    return _wrap(group, scores)


def score_study(grouped: GroupedStudy, method: str | None = None) -> ScoreSet:
    """Score every group separately with the chosen method.

    ``method`` defaults to signed-rank scores for numeric outcomes and
    Prentice-Wilcoxon scores for survival outcomes.
    """
    if method is None:
        method = WILCOXON if grouped.outcome_kind == "numeric" else PRENTICE_WILCOXON
    method = canonical_method(method)
    scorer = wilcoxon_scores if method == WILCOXON else prentice_wilcoxon_scores
    if method == WILCOXON and len(set(grouped.group_sizes())) > 1:
        warnings.warn(
            "signed-rank statistics are summed over groups of unequal size; "
            "groups with more pairs carry more weight",
            stacklevel=2,
        )
    out = []
    for key, group in zip(grouped.keys, grouped.groups):
        gs = scorer(group)
        out.append(GroupScores(key, gs.scores, gs.treated, gs.unit_ids))
    return ScoreSet(method, tuple(out))


def group_statistics(scores: ScoreSet, grouped: GroupedStudy) -> GroupStatistics:
    """T_g = sum of the treated units' scores, per group."""
    if len(scores.groups) != grouped.G:
        raise ValidationError("score set and grouped study have different group counts")
    T = np.empty(grouped.G)
    n = np.empty(grouped.G, dtype=int)
    for g, (gs, group) in enumerate(zip(scores.groups, grouped.groups)):
        expected = tuple(tuple(u.unit_id for u in s.units) for s in group)
        if gs.unit_ids != expected:
            missing = {u for ids in expected for u in ids} - {u for ids in gs.unit_ids for u in ids}
            raise ValidationError(
                f"scores do not cover group {g}; missing units {sorted(map(str, missing))}"
            )
        T[g] = gs.statistic()
        n[g] = gs.n_sets
    return GroupStatistics(T, n)
