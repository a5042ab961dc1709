"""Value distributions for buyers and sellers.

Four kinds cover everything the experiments need: a point mass, a uniform
distribution over an explicit atom list, a continuous uniform interval, and
the geometric atom family {r, r^2, ..., r^k}.  Discrete kinds keep their
atoms as exact numbers so expectations can be enumerated without rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple

import numpy as np

from .errors import UnsupportedInstance
from .numeric import Num, all_exact, format_value, parse_value


class DistributionSpec:
    """Common interface: sample, cdf, median, and (if discrete) the support."""

    is_discrete: bool = True

    def sample(self, gen: np.random.Generator) -> Num:
        raise NotImplementedError

    def cdf(self, x: Num) -> Num:
        raise NotImplementedError

    def support(self) -> Tuple[Num, ...]:
        """Atoms with equal weight 1/len. Raises for continuous kinds."""
        raise NotImplementedError

    def median(self) -> Num:
        """Smallest support point with cdf >= 1/2 (midpoint for continuous)."""
        raise NotImplementedError

    def max_value(self) -> Num:
        raise NotImplementedError

    def to_json(self, mode: str) -> dict:
        raise NotImplementedError


def _check_nonnegative(values: Sequence[Num]):
    if any(v < 0 for v in values):
        raise ValueError("distribution support must lie in [0, inf)")


@dataclass(frozen=True)
class PointMass(DistributionSpec):
    value: Num

    def __post_init__(self):
        _check_nonnegative([self.value])

    def sample(self, gen):
        return self.value

    def cdf(self, x):
        return 1 if x >= self.value else 0

    def support(self):
        return (self.value,)

    def median(self):
        return self.value

    def max_value(self):
        return self.value

    def to_json(self, mode):
        return {"kind": "point-mass", "value": format_value(self.value, mode)}


@dataclass(frozen=True)
class UniformDiscrete(DistributionSpec):
    atoms: Tuple[Num, ...]

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("UniformDiscrete requires at least one atom")
        _check_nonnegative(self.atoms)

    def sample(self, gen):
        return self.atoms[int(gen.integers(0, len(self.atoms)))]

    def cdf(self, x):
        hits = sum(1 for a in self.atoms if a <= x)
        if all_exact(self.atoms):
            return Fraction(hits, len(self.atoms))
        return hits / len(self.atoms)

    def support(self):
        return self.atoms

    def median(self):
        n = len(self.atoms)
        ordered = sorted(self.atoms)
        # smallest atom at which the cdf reaches 1/2
        return ordered[(n - 1) // 2]

    def max_value(self):
        return max(self.atoms)

    def to_json(self, mode):
        return {"kind": "uniform-discrete", "atoms": [format_value(a, mode) for a in self.atoms]}


@dataclass(frozen=True)
class UniformContinuous(DistributionSpec):
    lo: float
    hi: float
    is_discrete = False

    def __post_init__(self):
        _check_nonnegative([self.lo])
        if not self.hi > self.lo:
            raise ValueError("UniformContinuous requires hi > lo")

    def sample(self, gen):
        return self.lo + (self.hi - self.lo) * float(gen.random())

    def cdf(self, x):
        if x < self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        return (x - self.lo) / (self.hi - self.lo)

    def support(self):
        raise UnsupportedInstance("continuous distribution has no finite support")

    def median(self):
        return (self.lo + self.hi) / 2

    def max_value(self):
        return self.hi

    def to_json(self, mode):
        return {"kind": "uniform-continuous", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class GeometricAtoms(DistributionSpec):
    """Uniform over {r, r^2, ..., r^k} for a base 0 < r < 1."""

    base: Num
    count: int

    def __post_init__(self):
        if not 0 < self.base < 1:
            raise ValueError("GeometricAtoms requires 0 < base < 1")
        if self.count < 1:
            raise ValueError("GeometricAtoms requires count >= 1")

    def _atoms(self) -> Tuple[Num, ...]:
        return tuple(self.base**i for i in range(1, self.count + 1))

    def sample(self, gen):
        return self.base ** int(gen.integers(1, self.count + 1))

    def cdf(self, x):
        hits = sum(1 for a in self._atoms() if a <= x)
        if all_exact([self.base]):
            return Fraction(hits, self.count)
        return hits / self.count

    def support(self):
        return self._atoms()

    def median(self):
        return sorted(self._atoms())[(self.count - 1) // 2]

    def max_value(self):
        return self.base

    def to_json(self, mode):
        return {
            "kind": "geometric-atoms",
            "base": format_value(self.base, mode),
            "count": self.count,
        }


def spec_from_json(data: dict, mode: str) -> DistributionSpec:
    kind = data.get("kind")
    if kind == "point-mass":
        return PointMass(parse_value(data["value"], mode))
    if kind == "uniform-discrete":
        return UniformDiscrete(tuple(parse_value(a, mode) for a in data["atoms"]))
    if kind == "uniform-continuous":
        return UniformContinuous(float(data["lo"]), float(data["hi"]))
    if kind == "geometric-atoms":
        return GeometricAtoms(parse_value(data["base"], mode), int(data["count"]))
    raise ValueError(f"unknown distribution kind {kind!r}")
