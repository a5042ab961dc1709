"""Downward-closed feasibility systems on buyer sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Tuple


class ConstraintSystem:
    """Which sets of buyers may trade simultaneously."""

    def feasible(self, buyers: FrozenSet[str]) -> bool:
        raise NotImplementedError

    def intersect(self, other: "ConstraintSystem") -> "ConstraintSystem":
        if isinstance(other, Unconstrained):
            return self
        if isinstance(self, Unconstrained):
            return other
        return Intersection(self, other)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Unconstrained(ConstraintSystem):
    def feasible(self, buyers):
        return True

    def to_json(self):
        return {"kind": "unconstrained"}


@dataclass(frozen=True)
class KUniform(ConstraintSystem):
    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("KUniform requires k >= 0")

    def feasible(self, buyers):
        return len(buyers) <= self.k

    def to_json(self):
        return {"kind": "k-uniform", "k": self.k}


@dataclass(frozen=True)
class ExplicitDownwardClosed(ConstraintSystem):
    """Feasible sets are exactly the subsets of the listed maximal sets.

    Storing only maximal sets keeps the system downward closed by
    construction; the empty set is always feasible.
    """

    maximal: Tuple[FrozenSet[str], ...]

    def __post_init__(self):
        for a in self.maximal:
            for b in self.maximal:
                if a is not b and a <= b:
                    raise ValueError("maximal sets must be pairwise incomparable")

    def feasible(self, buyers):
        if not buyers:
            return True
        return any(buyers <= m for m in self.maximal)

    def to_json(self):
        return {"kind": "explicit", "maximal": [sorted(m) for m in self.maximal]}


@dataclass(frozen=True)
class Intersection(ConstraintSystem):
    first: ConstraintSystem
    second: ConstraintSystem

    def feasible(self, buyers):
        return self.first.feasible(buyers) and self.second.feasible(buyers)

    def to_json(self):
        return {"kind": "intersection", "first": self.first.to_json(), "second": self.second.to_json()}


UNCONSTRAINED = Unconstrained()


def feasible(cs: ConstraintSystem, buyers: FrozenSet[str]) -> bool:
    """Membership test for a buyer set under a constraint system."""
    return cs.feasible(frozenset(buyers))


def constraint_from_json(data: dict) -> ConstraintSystem:
    kind = data.get("kind", "unconstrained")
    if kind == "unconstrained":
        return UNCONSTRAINED
    if kind == "k-uniform":
        return KUniform(int(data["k"]))
    if kind == "explicit":
        return ExplicitDownwardClosed(tuple(frozenset(m) for m in data["maximal"]))
    if kind == "intersection":
        return Intersection(constraint_from_json(data["first"]), constraint_from_json(data["second"]))
    raise ValueError(f"unknown constraint kind {kind!r}")
