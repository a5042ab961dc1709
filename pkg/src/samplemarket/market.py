"""Market instances, outcomes, sample profiles, and their Bayesian generators.

A :class:`MarketInstance` is the unit every mechanism runs on: ordered
buyers with valuation oracles, ordered unit-supply sellers with scalar
values, an optional feasibility constraint on buyer sets, and a flag for
identical items.  A :class:`MarketDistribution` is the environment those
instances are drawn from; :func:`sample_profile` draws the one extra sample
per seller (and per buyer, when asked) that the single-sample mechanisms
consume.  All types are immutable value objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Tuple

import numpy as np

from .constraints import UNCONSTRAINED, ConstraintSystem, constraint_from_json
from .distributions import DistributionSpec, spec_from_json
from .errors import StructuralError, UnsupportedInstance
from .numeric import Num, format_value, is_exact, parse_value
from .rng import RngContract
from .valuations import (
    AdditiveValuation,
    UnitDemandValuation,
    ValuationOracle,
    XOSValuation,
    oracle_from_json,
)


@dataclass(frozen=True)
class BuyerSpec:
    id: str
    oracle: ValuationOracle


@dataclass(frozen=True)
class SellerSpec:
    id: str
    value: Num

    def __post_init__(self):
        if self.value < 0:
            raise StructuralError(f"seller {self.id!r} has negative value")


class MarketInstance:
    """One concrete market: who is present and what everything is worth."""

    def __init__(
        self,
        buyers: Iterable[BuyerSpec],
        sellers: Iterable[SellerSpec],
        constraint: ConstraintSystem = UNCONSTRAINED,
        items_identical: bool = False,
    ):
        self.buyers = tuple(buyers)
        self.sellers = tuple(sellers)
        self.constraint = constraint
        self.items_identical = items_identical
        ids = [b.id for b in self.buyers] + [s.id for s in self.sellers]
        if len(set(ids)) != len(ids):
            raise StructuralError("buyer and seller ids must be unique")
        self._oracles = {b.id: b.oracle for b in self.buyers}
        self._values = {s.id: s.value for s in self.sellers}

    @property
    def buyer_ids(self) -> Tuple[str, ...]:
        return tuple(b.id for b in self.buyers)

    @property
    def seller_ids(self) -> Tuple[str, ...]:
        return tuple(s.id for s in self.sellers)

    @property
    def seller_values(self) -> Dict[str, Num]:
        return dict(self._values)

    def oracle_of(self, buyer_id: str) -> ValuationOracle:
        return self._oracles[buyer_id]

    def value_of(self, seller_id: str) -> Num:
        return self._values[seller_id]

    @property
    def exact(self) -> bool:
        """True when every number in the instance is an int or Fraction."""
        return all(is_exact(v) for v in self._values.values()) and all(
            b.oracle.is_exact for b in self.buyers
        )

    def replace_seller_value(self, seller_id: str, value: Num) -> "MarketInstance":
        sellers = [SellerSpec(s.id, value if s.id == seller_id else s.value) for s in self.sellers]
        return MarketInstance(self.buyers, sellers, self.constraint, self.items_identical)

    def replace_buyer_oracle(self, buyer_id: str, oracle: ValuationOracle) -> "MarketInstance":
        buyers = [BuyerSpec(b.id, oracle if b.id == buyer_id else b.oracle) for b in self.buyers]
        return MarketInstance(buyers, self.sellers, self.constraint, self.items_identical)

    def scalar_buyer_values(self) -> Dict[str, Num]:
        """Per-buyer scalar values for identical-item markets.

        Reads each unit-demand oracle on a single seller; meaningful only
        when items are identical.
        """
        if not self.items_identical:
            raise UnsupportedInstance("scalar buyer values require identical items")
        if not self.sellers:
            return {b.id: 0 for b in self.buyers}
        probe = {self.sellers[0].id}
        return {b.id: b.oracle.value(probe) for b in self.buyers}

    def __repr__(self):
        return f"MarketInstance(n={len(self.buyers)}, m={len(self.sellers)})"


@dataclass(frozen=True)
class Outcome:
    """Allocation plus money flows; the unit of property verification."""

    allocation: Mapping[str, FrozenSet[str]]
    buyer_payments: Mapping[str, Num]
    seller_payments: Mapping[str, Num]
    unsold: FrozenSet[str]

    @staticmethod
    def build(
        market: MarketInstance,
        allocation: Mapping[str, Iterable[str]],
        buyer_payments: Mapping[str, Num],
        seller_payments: Mapping[str, Num],
    ) -> "Outcome":
        """Normalize an allocation against a market and fill in defaults."""
        alloc = {b.id: frozenset(allocation.get(b.id, ())) for b in market.buyers}
        sold = set()
        for bundle in alloc.values():
            if bundle & sold:
                raise StructuralError("allocation assigns a seller twice")
            sold |= bundle
        unsold = frozenset(market.seller_ids) - sold
        pay_b = {b.id: buyer_payments.get(b.id, 0) for b in market.buyers}
        pay_s = {s.id: seller_payments.get(s.id, 0) for s in market.sellers}
        return Outcome(alloc, pay_b, pay_s, unsold)

    def traded_buyers(self) -> Tuple[str, ...]:
        return tuple(b for b, bundle in self.allocation.items() if bundle)

    def to_json(self, mode: str) -> dict:
        return {
            "allocation": {b: sorted(bundle) for b, bundle in self.allocation.items()},
            "buyer_payments": {b: format_value(p, mode) for b, p in self.buyer_payments.items()},
            "seller_payments": {s: format_value(p, mode) for s, p in self.seller_payments.items()},
            "unsold": sorted(self.unsold),
        }


def validate_outcome(market: MarketInstance, outcome: Outcome) -> None:
    """Structural checks tying an outcome to its market.

    Raises :class:`StructuralError` on unknown ids, overlapping bundles,
    inconsistent unsold sets, payments to sellers who kept their item, or
    non-zero payments by buyers who received nothing.
    """
    buyer_ids = set(market.buyer_ids)
    seller_ids = set(market.seller_ids)
    sold = set()
    for b, bundle in outcome.allocation.items():
        if b not in buyer_ids:
            raise StructuralError(f"unknown buyer {b!r} in allocation")
        if not set(bundle) <= seller_ids:
            raise StructuralError(f"unknown seller in bundle of {b!r}")
        if bundle & sold:
            raise StructuralError("allocation bundles overlap")
        sold |= bundle
    for b in outcome.buyer_payments:
        if b not in buyer_ids:
            raise StructuralError(f"unknown buyer {b!r} in payments")
    for s in outcome.seller_payments:
        if s not in seller_ids:
            raise StructuralError(f"unknown seller {s!r} in payments")
    if outcome.unsold != seller_ids - sold:
        raise StructuralError("unsold set does not match allocation")
    for s in outcome.unsold:
        if outcome.seller_payments.get(s, 0) != 0:
            raise StructuralError(f"seller {s!r} kept her item but was paid")
    for b in buyer_ids:
        if not outcome.allocation.get(b) and outcome.buyer_payments.get(b, 0) != 0:
            raise StructuralError(f"buyer {b!r} pays without receiving items")


def social_welfare(market: MarketInstance, outcome: Outcome) -> Num:
    """Sum of allocated buyers' values plus values of unsold sellers."""
    validate_outcome(market, outcome)
    total: Num = 0
    for b, bundle in outcome.allocation.items():
        if bundle:
            total += market.oracle_of(b).value(bundle)
    for s in outcome.unsold:
        total += market.value_of(s)
    return total


def budget_surplus(outcome: Outcome) -> Num:
    """Money collected from buyers minus money paid to sellers."""
    return sum(outcome.buyer_payments.values()) - sum(outcome.seller_payments.values())


# ---------------------------------------------------------------------------
# Bayesian environments


class BuyerValuationModel:
    """Draws a valuation oracle per trial; enumerable models expose support()."""

    def draw(self, gen: np.random.Generator, seller_ids: Tuple[str, ...]) -> ValuationOracle:
        raise NotImplementedError

    # scalar distribution for unit-demand buyers in double auctions, if any
    scalar_spec: Optional[DistributionSpec] = None

    def support(self, seller_ids: Tuple[str, ...]):
        """Finite weighted support [(oracle, weight)]; raises if infinite."""
        raise UnsupportedInstance(f"{type(self).__name__} has no finite support")

    def to_json(self, mode: str) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class FixedOracleModel(BuyerValuationModel):
    oracle: ValuationOracle

    def draw(self, gen, seller_ids):
        return self.oracle

    def support(self, seller_ids):
        from fractions import Fraction

        return [(self.oracle, Fraction(1))]

    def to_json(self, mode):
        return {"kind": "fixed", "oracle": self.oracle.to_json(mode)}


@dataclass(frozen=True)
class ScalarUnitDemandModel(BuyerValuationModel):
    """Unit-demand buyer with one scalar value for every (identical) item."""

    spec: DistributionSpec

    @property
    def scalar_spec(self):  # type: ignore[override]
        return self.spec

    def draw(self, gen, seller_ids):
        v = self.spec.sample(gen)
        return UnitDemandValuation({s: v for s in seller_ids})

    def support(self, seller_ids):
        from fractions import Fraction

        atoms = self.spec.support()
        w = Fraction(1, len(atoms))
        return [(UnitDemandValuation({s: v for s in seller_ids}), w) for v in atoms]

    def to_json(self, mode):
        return {"kind": "scalar-unit-demand", "spec": self.spec.to_json(mode)}


@dataclass(frozen=True)
class RandomXOSModel(BuyerValuationModel):
    """XOS oracle with per-support, per-seller weights drawn iid."""

    num_supports: int
    weight_spec: DistributionSpec

    def draw(self, gen, seller_ids):
        supports = []
        for _ in range(self.num_supports):
            supports.append({s: self.weight_spec.sample(gen) for s in seller_ids})
        return XOSValuation(supports)

    def to_json(self, mode):
        return {
            "kind": "random-xos",
            "num_supports": self.num_supports,
            "weight_spec": self.weight_spec.to_json(mode),
        }


@dataclass(frozen=True)
class RandomAdditiveModel(BuyerValuationModel):
    weight_spec: DistributionSpec

    def draw(self, gen, seller_ids):
        return AdditiveValuation({s: self.weight_spec.sample(gen) for s in seller_ids})

    def to_json(self, mode):
        return {"kind": "random-additive", "weight_spec": self.weight_spec.to_json(mode)}


def model_from_json(data: dict, mode: str) -> BuyerValuationModel:
    kind = data.get("kind")
    if kind == "fixed":
        return FixedOracleModel(oracle_from_json(data["oracle"], mode))
    if kind == "scalar-unit-demand":
        return ScalarUnitDemandModel(spec_from_json(data["spec"], mode))
    if kind == "random-xos":
        return RandomXOSModel(int(data["num_supports"]), spec_from_json(data["weight_spec"], mode))
    if kind == "random-additive":
        return RandomAdditiveModel(spec_from_json(data["weight_spec"], mode))
    raise ValueError(f"unknown buyer model kind {kind!r}")


@dataclass(frozen=True)
class BuyerModel:
    id: str
    model: BuyerValuationModel


@dataclass(frozen=True)
class SellerModel:
    id: str
    spec: DistributionSpec


@dataclass(frozen=True)
class MarketDistribution:
    """The environment: per-buyer oracle generators and per-seller specs."""

    buyers: Tuple[BuyerModel, ...]
    sellers: Tuple[SellerModel, ...]
    constraint: ConstraintSystem = UNCONSTRAINED
    items_identical: bool = False

    @property
    def seller_ids(self) -> Tuple[str, ...]:
        return tuple(s.id for s in self.sellers)

    @property
    def numeric_mode(self) -> str:
        return "exact" if all(s.spec.is_discrete for s in self.sellers) else "float"

    def max_seller_support(self) -> Num:
        return max((s.spec.max_value() for s in self.sellers), default=0)

    def to_json(self, mode: Optional[str] = None) -> dict:
        mode = mode or self.numeric_mode
        return {
            "numeric_mode": mode,
            "items_identical": self.items_identical,
            "constraint": self.constraint.to_json(),
            "buyers": [{"id": b.id, "model": b.model.to_json(mode)} for b in self.buyers],
            "sellers": [{"id": s.id, "spec": s.spec.to_json(mode)} for s in self.sellers],
        }


def distribution_from_json(data: dict) -> MarketDistribution:
    mode = data.get("numeric_mode", "exact")
    buyers = tuple(BuyerModel(b["id"], model_from_json(b["model"], mode)) for b in data["buyers"])
    sellers = tuple(SellerModel(s["id"], spec_from_json(s["spec"], mode)) for s in data["sellers"])
    constraint = constraint_from_json(data.get("constraint", {"kind": "unconstrained"}))
    return MarketDistribution(buyers, sellers, constraint, bool(data.get("items_identical", False)))


@dataclass(frozen=True)
class SampleProfile:
    """One independent draw per seller (and per buyer where required)."""

    seller_samples: Mapping[str, Num]
    buyer_samples: Optional[Mapping[str, Num]] = None
    seed_record: dict = field(default_factory=dict)

    def to_json(self, mode: str) -> dict:
        return {
            "numeric_mode": mode,
            "seller_samples": {s: format_value(v, mode) for s, v in self.seller_samples.items()},
            "buyer_samples": None
            if self.buyer_samples is None
            else {b: format_value(v, mode) for b, v in self.buyer_samples.items()},
            "seed_record": dict(self.seed_record),
        }


def profile_from_json(data: dict) -> SampleProfile:
    mode = data.get("numeric_mode", "exact")
    sellers = {s: parse_value(v, mode) for s, v in data["seller_samples"].items()}
    buyers = data.get("buyer_samples")
    if buyers is not None:
        buyers = {b: parse_value(v, mode) for b, v in buyers.items()}
    return SampleProfile(sellers, buyers, dict(data.get("seed_record", {})))


def sample_profile(
    dist: MarketDistribution, rng: RngContract, include_buyers: bool = False
) -> SampleProfile:
    """Draw the single-sample profile for a market distribution.

    Deterministic given the contract: sellers are drawn in declaration
    order, then buyers (when requested and when the buyer model has a
    scalar distribution).
    """
    gen = rng.generator()
    seller_samples = {s.id: s.spec.sample(gen) for s in dist.sellers}
    buyer_samples = None
    if include_buyers:
        buyer_samples = {}
        for b in dist.buyers:
            spec = b.model.scalar_spec
            if spec is not None:
                buyer_samples[b.id] = spec.sample(gen)
    return SampleProfile(seller_samples, buyer_samples, rng.seed_record())


def draw_market(dist: MarketDistribution, rng: RngContract) -> MarketInstance:
    """Draw one market instance (values only, no samples)."""
    gen = rng.generator()
    seller_ids = dist.seller_ids
    buyers = [BuyerSpec(b.id, b.model.draw(gen, seller_ids)) for b in dist.buyers]
    sellers = [SellerSpec(s.id, s.spec.sample(gen)) for s in dist.sellers]
    return MarketInstance(buyers, sellers, dist.constraint, dist.items_identical)


def instance_to_json(market: MarketInstance, mode: Optional[str] = None) -> dict:
    mode = mode or ("exact" if market.exact else "float")
    return {
        "numeric_mode": mode,
        "items_identical": market.items_identical,
        "constraint": market.constraint.to_json(),
        "buyers": [{"id": b.id, "valuation": b.oracle.to_json(mode)} for b in market.buyers],
        "sellers": [{"id": s.id, "value": format_value(s.value, mode)} for s in market.sellers],
    }


def instance_from_json(data: dict) -> MarketInstance:
    mode = data.get("numeric_mode", "exact")
    buyers = [BuyerSpec(b["id"], oracle_from_json(b["valuation"], mode)) for b in data["buyers"]]
    sellers = [SellerSpec(s["id"], parse_value(s["value"], mode)) for s in data["sellers"]]
    constraint = constraint_from_json(data.get("constraint", {"kind": "unconstrained"}))
    return MarketInstance(buyers, sellers, constraint, bool(data.get("items_identical", False)))
