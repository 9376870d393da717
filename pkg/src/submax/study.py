"""Matched sets, covariate-pattern groups and the comparison matrix.

A matched set is mapped to a group key with one entry per binary modifier:
``LEVEL0``/``LEVEL1`` when every unit in the set shares that level, and
``MISMATCHED`` otherwise.  The comparison matrix has an all-ones row for the
whole study followed by a (level 0, level 1) pair of rows per modifier.
Mismatched groups get a 0 in both rows of that modifier.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Hashable, Union

import numpy as np

from .exceptions import ValidationError

LEVEL0 = 0
LEVEL1 = 1
MISMATCHED = 2

GroupKey = tuple  # tuple of LEVEL0 / LEVEL1 / MISMATCHED, one per covariate


@dataclass(frozen=True)
class Survival:
    """A right-censored survival outcome; ``event`` is True for a death."""

    time: float
    event: bool


Outcome = Union[float, Survival]


@dataclass(frozen=True)
class Unit:
    unit_id: Hashable
    treated: bool
    outcome: Outcome
    covariates: tuple = ()


@dataclass(frozen=True)
class MatchedSet:
    set_id: Hashable
    units: tuple

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))

    @property
    def size(self) -> int:
        return len(self.units)

    @property
    def treated_index(self) -> int:
        idx = [j for j, u in enumerate(self.units) if u.treated]
        if len(idx) != 1:
            raise ValidationError(
                f"matched set {self.set_id!r} has {len(idx)} treated units, expected 1"
            )
        return idx[0]


@dataclass(frozen=True)
class CovariateSpec:
    """Names of the L binary modifiers and two display labels for each."""

    names: tuple = ()
    level_labels: tuple = ()

    def __post_init__(self):
        names = tuple(self.names)
        labels = tuple(tuple(x) for x in self.level_labels) if self.level_labels else tuple(
            (f"{n}=0", f"{n}=1") for n in names
        )
        if len(labels) != len(names):
            raise ValidationError("need one pair of level labels per covariate")
        for pair in labels:
            if len(pair) != 2:
                raise ValidationError(f"level labels must come in pairs, got {pair!r}")
        if len(set(names)) != len(names):
            raise ValidationError("covariate names must be unique")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "level_labels", labels)

    @property
    def L(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class GroupedStudy:
    """Matched sets partitioned by group key, keys in lexicographic order."""

    keys: tuple
    groups: tuple  # tuple of tuples of MatchedSet, aligned with keys
    covariate_spec: CovariateSpec
    outcome_kind: str

    @property
    def G(self) -> int:
        return len(self.keys)

    @property
    def n_sets(self) -> int:
        return sum(len(g) for g in self.groups)

    def group_sizes(self) -> np.ndarray:
        return np.array([len(g) for g in self.groups])

    def as_dict(self) -> dict:
        return dict(zip(self.keys, self.groups))


@dataclass(frozen=True)
class ComparisonMatrix:
    """K x G 0/1 weights; row 0 is the whole study."""

    matrix: np.ndarray
    labels: tuple
    keys: tuple = field(default=())

    @property
    def K(self) -> int:
        return self.matrix.shape[0]

    @property
    def G(self) -> int:
        return self.matrix.shape[1]

    def subpopulation(self, k: int) -> list:
        """Indices of groups with weight 1 in row ``k``."""
        return [g for g in range(self.G) if self.matrix[k, g] != 0]

    def sample_sizes(self, group_sizes) -> np.ndarray:
        """Number of matched sets counted by each comparison."""
        return (self.matrix @ np.asarray(group_sizes)).astype(int)


def _outcome_kind(outcome) -> str:
    if isinstance(outcome, Survival):
        return "survival"
    if isinstance(outcome, (int, float, np.integer, np.floating)) and not isinstance(outcome, bool):
        return "numeric"
    raise ValidationError(f"unsupported outcome {outcome!r}")


def group_key(mset: MatchedSet, L: int) -> GroupKey:
    """Group key of one matched set, comparing covariates coordinatewise."""
    key = []
    for ell in range(L):
        levels = {u.covariates[ell] for u in mset.units}
        if len(levels) == 1:
            key.append(LEVEL0 if levels.pop() == 0 else LEVEL1)
        else:
            key.append(MISMATCHED)
    return tuple(key)


def group_study(sets: Sequence[MatchedSet], spec: CovariateSpec) -> GroupedStudy:
    """Partition matched sets into groups by covariate pattern.

    Raises
    ------
    ValidationError
        On sets without exactly one treated unit, fewer than two units,
        duplicate unit ids, covariate vectors of the wrong length, non-binary
        covariate values or mixed outcome kinds.
    """
    L = spec.L
    seen_units = set()
    seen_sets = set()
    kinds = set()
    buckets: dict = {}
    for mset in sets:
        if mset.set_id in seen_sets:
            raise ValidationError(f"duplicate set id {mset.set_id!r}")
        seen_sets.add(mset.set_id)
        if mset.size < 2:
            raise ValidationError(f"matched set {mset.set_id!r} has fewer than two units")
        mset.treated_index  # validates exactly one treated unit
        for u in mset.units:
            if u.unit_id in seen_units:
                raise ValidationError(f"duplicate unit id {u.unit_id!r}")
            seen_units.add(u.unit_id)
            if len(u.covariates) != L:
                raise ValidationError(
                    f"unit {u.unit_id!r} has {len(u.covariates)} covariates, expected {L}"
                )
            for v in u.covariates:
                if v not in (0, 1):
                    raise ValidationError(
                        f"unit {u.unit_id!r} has non-binary covariate value {v!r}"
                    )
            kinds.add(_outcome_kind(u.outcome))
        buckets.setdefault(group_key(mset, L), []).append(mset)
    if not buckets:
        raise ValidationError("study has no matched sets")
    if len(kinds) > 1:
        raise ValidationError("outcome kind must be the same for every unit")
    keys = tuple(sorted(buckets))
    groups = tuple(
        tuple(sorted(buckets[k], key=lambda s: _sort_token(s.set_id))) for k in keys
    )
    return GroupedStudy(keys, groups, spec, kinds.pop())


def _sort_token(x):
    # mixed id types sort by (type name, value)
    return (type(x).__name__, x)


def comparison_labels(spec: CovariateSpec) -> tuple:
    labels = ["All"]
    for pair in spec.level_labels:
        labels.extend(pair)
    return tuple(labels)


def build_comparison_matrix(grouped: GroupedStudy) -> ComparisonMatrix:
    """Overall row followed by (level 0, level 1) rows for each modifier."""
    spec = grouped.covariate_spec
    L = spec.L
    G = grouped.G
    if G == 0:
        raise ValidationError("no groups to compare")
    cmat = np.zeros((2 * L + 1, G))
    cmat[0, :] = 1.0
    for g, key in enumerate(grouped.keys):
        for ell in range(L):
            if key[ell] == LEVEL0:
                cmat[2 * ell + 1, g] = 1.0
            elif key[ell] == LEVEL1:
                cmat[2 * ell + 2, g] = 1.0
    labels = comparison_labels(spec)
    empty = [labels[k] for k in range(cmat.shape[0]) if not cmat[k].any()]
    if empty:
        raise ValidationError(f"empty subgroup(s): {', '.join(empty)}")
    return ComparisonMatrix(cmat, labels, grouped.keys)


def balanced_comparison_matrix(L: int) -> ComparisonMatrix:
    """Comparison matrix for all 2^L exactly matched patterns."""
    keys = [tuple((g >> (L - 1 - ell)) & 1 for ell in range(L)) for g in range(2 ** L)]
    spec = CovariateSpec(tuple(f"x{ell + 1}" for ell in range(L)))
    grouped = GroupedStudy(tuple(keys), tuple(() for _ in keys), spec, "numeric")
    return build_comparison_matrix(grouped)
