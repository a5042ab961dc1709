"""Reusable market families for experiments and tests."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .constraints import UNCONSTRAINED, ConstraintSystem
from .distributions import (
    DistributionSpec,
    GeometricAtoms,
    PointMass,
    UniformContinuous,
    UniformDiscrete,
)
from .market import (
    BuyerModel,
    BuyerSpec,
    FixedOracleModel,
    MarketDistribution,
    MarketInstance,
    RandomXOSModel,
    ScalarUnitDemandModel,
    SellerModel,
    SellerSpec,
)
from .numeric import Num
from .valuations import AdditiveValuation, UnitDemandValuation


def _buyer_ids(n: int):
    return [f"b{i}" for i in range(1, n + 1)]


def _seller_ids(m: int):
    return [f"s{i}" for i in range(1, m + 1)]


def xos_uniform_family(
    n_buyers: int = 3,
    m_sellers: int = 4,
    num_supports: int = 2,
    buyer_hi: int = 10,
    seller_hi: int = 5,
) -> MarketDistribution:
    """Random XOS buyers over integer grids; the stress family for the VCG routes."""
    weight_spec = UniformDiscrete(tuple(range(buyer_hi + 1)))
    seller_spec = UniformDiscrete(tuple(range(seller_hi + 1)))
    buyers = tuple(
        BuyerModel(b, RandomXOSModel(num_supports, weight_spec)) for b in _buyer_ids(n_buyers)
    )
    sellers = tuple(SellerModel(s, seller_spec) for s in _seller_ids(m_sellers))
    return MarketDistribution(buyers, sellers)


def double_auction_uniform(n: int, m: int, constraint: ConstraintSystem = UNCONSTRAINED) -> MarketDistribution:
    """Identical items, unit-demand buyers, everything uniform on [0, 1]."""
    spec = UniformContinuous(0.0, 1.0)
    buyers = tuple(BuyerModel(b, ScalarUnitDemandModel(spec)) for b in _buyer_ids(n))
    sellers = tuple(SellerModel(s, spec) for s in _seller_ids(m))
    return MarketDistribution(buyers, sellers, constraint, items_identical=True)


def double_auction_grid(
    n: int, m: int, denominator: int = 20, constraint: ConstraintSystem = UNCONSTRAINED
) -> MarketDistribution:
    """Rational double auction: values uniform on {0, 1/d, ..., 1}."""
    atoms = tuple(Fraction(i, denominator) for i in range(denominator + 1))
    spec = UniformDiscrete(atoms)
    buyers = tuple(BuyerModel(b, ScalarUnitDemandModel(spec)) for b in _buyer_ids(n))
    sellers = tuple(SellerModel(s, spec) for s in _seller_ids(m))
    return MarketDistribution(buyers, sellers, constraint, items_identical=True)


def bilateral_family(buyer_spec: DistributionSpec, seller_spec: DistributionSpec) -> MarketDistribution:
    """One seller, one unit-demand buyer."""
    return MarketDistribution(
        (BuyerModel("b1", ScalarUnitDemandModel(buyer_spec)),),
        (SellerModel("s1", seller_spec),),
        items_identical=True,
    )


def lowerbound_instance(k: int) -> MarketDistribution:
    """Bilateral family exhibiting the worst-case factor for sample-posted prices.

    The seller's value is uniform on {1/3, 1/3^2, ..., 1/3^k}; the buyer's
    value is fixed at 1, so the optimum always trades.  As k grows the
    measured approximation ratio of the adjusted VCG climbs toward 2.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    seller_spec = GeometricAtoms(Fraction(1, 3), k)
    buyer = BuyerModel("b1", FixedOracleModel(UnitDemandValuation({"s1": 1})))
    return MarketDistribution((buyer,), (SellerModel("s1", seller_spec),), items_identical=True)


def single_item_instance(
    seller_value: Num, buyer_values: Sequence[Num], ids: Optional[Sequence[str]] = None
) -> MarketInstance:
    """One seller, scalar unit-demand buyers; the deficit-demo shape."""
    ids = list(ids) if ids is not None else _buyer_ids(len(buyer_values))
    buyers = [
        BuyerSpec(b, UnitDemandValuation({"s1": v})) for b, v in zip(ids, buyer_values)
    ]
    return MarketInstance(buyers, [SellerSpec("s1", seller_value)], items_identical=True)


def bilateral_instance(buyer_value: Num, seller_value: Num) -> MarketInstance:
    return MarketInstance(
        [BuyerSpec("b1", AdditiveValuation({"s1": buyer_value}))],
        [SellerSpec("s1", seller_value)],
        items_identical=True,
    )


FAMILY_BUILDERS = {
    "xos-uniform": xos_uniform_family,
    "double-auction-uniform": double_auction_uniform,
    "double-auction-grid": double_auction_grid,
    "lowerbound": lowerbound_instance,
}
