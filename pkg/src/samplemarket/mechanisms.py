"""Two-sided market mechanisms driven by a single sample per seller.

All mechanisms follow the same protocol: they consume a market instance
(whose values play the role of reported bids), a sample profile, and a
randomness contract, and they emit an :class:`~samplemarket.market.Outcome`.
Runs are deterministic given those three inputs.

The mechanisms:

* :func:`adjusted_vcg` posts each seller her sample, then runs VCG over the
  accepting sellers with the objective "buyer value minus sampled prices".
  IR, DSIC, weakly budget balanced, and 2-approximate for subadditive
  buyers.
* :func:`surplus_mechanism` is the reduction form of the same idea: it
  discounts the buyer valuations by sampled prices and delegates the
  allocation to any IR/DSIC one-sided mechanism; buyers pay the one-sided
  price plus the samples of their items.
* :func:`reserve_rehearsal` handles double auctions (identical items,
  unit-demand buyers).  It selects buyers online against a price multiset
  built from buyer samples and pairs each selected buyer with a uniformly
  random seller at price ``max(seller sample, reserve)``.  Money moves only
  inside matched pairs, so the budget balances exactly.
* :func:`pairing_reduction` generalizes that pairing step to any one-sided
  binary mechanism over the buyers.
* :func:`median_mechanism` and :func:`naive_two_sided_vcg` are baselines:
  the full-prior posted-median rule for bilateral trade, and the textbook
  two-sided VCG whose deficit motivates everything else.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .constraints import KUniform, Unconstrained
from .errors import StructuralError, UnsupportedInstance
from .market import (
    BuyerSpec,
    MarketInstance,
    Outcome,
    SampleProfile,
    budget_surplus,
)
from .numeric import Num
from .onesided import ExactVCG, OneSidedMechanism, RehearsalSelector, rehearsal_thresholds
from .optengine import DEFAULT_EVAL_BUDGET, max_adjusted_welfare, vcg_payments
from .rng import RngContract
from .valuations import DiscountedOracle, UnitDemandValuation, as_xos_supports


def accepted_sellers(market: MarketInstance, seller_samples: Mapping[str, Num]) -> List[str]:
    """Sellers accepting their sampled price (value <= sample; ties accept)."""
    return [s.id for s in market.sellers if s.value <= seller_samples[s.id]]


def adjusted_vcg(
    market: MarketInstance,
    seller_samples: Mapping[str, Num],
    budget: int = DEFAULT_EVAL_BUDGET,
) -> Outcome:
    """Sample-posted prices for sellers, VCG on the adjusted objective.

    Each seller is offered her sample and trades only if she accepts.  On
    the accepting sellers, the allocation maximizes total buyer value minus
    the sampled prices of assigned items; each trading buyer is charged her
    VCG price for that objective plus the samples of her items, and each
    selling seller is paid exactly her sample.
    """
    if not isinstance(market.constraint, Unconstrained):
        raise UnsupportedInstance(
            "adjusted VCG supports unconstrained markets; use the pairing reduction for constraints"
        )
    available = accepted_sellers(market, seller_samples)
    chosen = max_adjusted_welfare(market.buyers, available, seller_samples, market.constraint, budget)
    internal = vcg_payments(market.buyers, available, seller_samples, market.constraint, chosen, budget)
    buyer_payments: Dict[str, Num] = {}
    seller_payments: Dict[str, Num] = {}
    for b in market.buyers:
        bundle = chosen.bundles[b.id]
        if bundle:
            buyer_payments[b.id] = internal[b.id] + sum(seller_samples[s] for s in bundle)
            for s in bundle:
                seller_payments[s] = seller_samples[s]
    return Outcome.build(market, chosen.bundles, buyer_payments, seller_payments)


def surplus_mechanism(
    market: MarketInstance,
    seller_samples: Mapping[str, Num],
    onesided: OneSidedMechanism,
    budget: int = DEFAULT_EVAL_BUDGET,
) -> Outcome:
    """Black-box reduction: discount valuations, delegate to a one-sided run.

    Builds the accepting seller set, reduces each buyer's valuation by the
    sampled item prices (the exact, sub-bundle-optimal discount, which
    keeps XOS valuations XOS), and lets the one-sided mechanism allocate.
    Buyers pay the one-sided price plus the samples of their items; sold
    sellers receive their sample, so the mechanism never loses money.
    """
    for b in market.buyers:
        as_xos_supports(b.oracle)  # raises for oracles outside the XOS classes
    available = accepted_sellers(market, seller_samples)
    discounted = [
        BuyerSpec(b.id, DiscountedOracle(b.oracle, seller_samples, available, mode="exact"))
        for b in market.buyers
    ]
    chosen, onesided_prices = onesided.run_combinatorial(
        discounted, available, market.constraint, budget
    )
    buyer_payments: Dict[str, Num] = {}
    seller_payments: Dict[str, Num] = {}
    for b in market.buyers:
        bundle = chosen.bundles[b.id]
        if bundle:
            buyer_payments[b.id] = onesided_prices[b.id] + sum(seller_samples[s] for s in bundle)
            for s in bundle:
                seller_payments[s] = seller_samples[s]
    return Outcome.build(market, chosen.bundles, buyer_payments, seller_payments)


def _scalar_unit_demand_values(market: MarketInstance) -> Dict[str, Num]:
    if not market.items_identical:
        raise UnsupportedInstance("this mechanism requires identical items")
    for b in market.buyers:
        if not isinstance(b.oracle, UnitDemandValuation):
            raise UnsupportedInstance("this mechanism requires unit-demand buyers")
    return market.scalar_buyer_values()


def reserve_rehearsal(
    market: MarketInstance,
    buyer_samples: Mapping[str, Num],
    seller_samples: Mapping[str, Num],
    order: Optional[Sequence[str]] = None,
    rng: Optional[np.random.Generator] = None,
) -> Outcome:
    """Double auction with sample-built reserves and random seller pairing.

    The price multiset and its minimum (the reserve) come from
    :func:`~samplemarket.onesided.rehearsal_thresholds` on the buyer
    samples with ``k = min(n, m)`` slots.  Buyers arrive in fixed order;
    one who beats the reserve and some remaining threshold price consumes
    that price and is paired with a uniformly random unused seller.  The
    pair trades at ``max(seller sample, reserve)`` if both sides agree
    (weak inequalities), and the buyer pays the seller exactly that price.
    A skipped buyer consumes nothing; a rejected proposal still consumes
    the seller and the threshold.
    """
    if rng is None:
        raise StructuralError("reserve_rehearsal needs a random generator for the pairing")
    values = _scalar_unit_demand_values(market)
    order = list(order) if order is not None else list(market.buyer_ids)
    k = min(len(market.buyers), len(market.sellers))
    allocation: Dict[str, List[str]] = {}
    buyer_payments: Dict[str, Num] = {}
    seller_payments: Dict[str, Num] = {}
    if k < 1:
        return Outcome.build(market, allocation, buyer_payments, seller_payments)
    missing = [b for b in order if b not in buyer_samples]
    if missing:
        raise StructuralError(f"missing buyer samples: {missing}")
    prices, reserve = rehearsal_thresholds([buyer_samples[b] for b in order], k)
    remaining = list(market.seller_ids)
    for b in order:
        v = values[b]
        if v > reserve and prices and prices[0] < v:
            idx = bisect_left(prices, v) - 1
            prices.pop(idx)
            s = remaining.pop(int(rng.integers(0, len(remaining))))
            price = max(seller_samples[s], reserve)
            if v >= price and market.value_of(s) <= price:
                allocation[b] = [s]
                buyer_payments[b] = price
                seller_payments[s] = price
    return Outcome.build(market, allocation, buyer_payments, seller_payments)


def pairing_reduction(
    market: MarketInstance,
    onesided: OneSidedMechanism,
    seller_samples: Mapping[str, Num],
    rng: Optional[np.random.Generator] = None,
    constraint=None,
    buyer_samples: Optional[Mapping[str, Num]] = None,
    order: Optional[Sequence[str]] = None,
    budget: int = DEFAULT_EVAL_BUDGET,
) -> Outcome:
    """Turn a one-sided winner selection into an exactly balanced two-sided run.

    The one-sided mechanism picks tentative buyers and prices under the
    market constraint intersected with a ``min(n, m)``-uniform cap.  As
    each tentative buyer is confirmed she is paired with a distinct
    uniformly random seller and offered a trade at ``max(tentative price,
    seller sample)``; the trade happens iff the buyer's value reaches the
    price and the seller's does not exceed it.  All money flows within
    matched pairs.
    """
    if rng is None:
        raise StructuralError("pairing_reduction needs a random generator for the pairing")
    values = _scalar_unit_demand_values(market)
    k = min(len(market.buyers), len(market.sellers))
    if k < 1:
        return Outcome.build(market, {}, {}, {})
    cs = (constraint if constraint is not None else market.constraint).intersect(KUniform(k))
    winners, tentative = onesided.select(
        values,
        cs,
        k,
        samples=buyer_samples,
        order=list(order) if order is not None else list(market.buyer_ids),
        budget=budget,
    )
    if len(winners) > len(market.sellers):
        raise StructuralError("one-sided mechanism selected more buyers than sellers")
    allocation: Dict[str, List[str]] = {}
    buyer_payments: Dict[str, Num] = {}
    seller_payments: Dict[str, Num] = {}
    remaining = list(market.seller_ids)
    for b in winners:
        s = remaining.pop(int(rng.integers(0, len(remaining))))
        price = max(tentative[b], seller_samples[s])
        if values[b] >= price and market.value_of(s) <= price:
            allocation[b] = [s]
            buyer_payments[b] = price
            seller_payments[s] = price
    return Outcome.build(market, allocation, buyer_payments, seller_payments)


def median_mechanism(market: MarketInstance, seller_median: Num) -> Outcome:
    """Bilateral posted price at the seller prior's median (full-prior baseline)."""
    if len(market.buyers) != 1 or len(market.sellers) != 1:
        raise UnsupportedInstance("the median mechanism is defined for bilateral trade")
    buyer = market.buyers[0]
    seller = market.sellers[0]
    q = seller_median
    v_b = buyer.oracle.value({seller.id})
    if v_b >= q and seller.value <= q:
        return Outcome.build(
            market, {buyer.id: [seller.id]}, {buyer.id: q}, {seller.id: q}
        )
    return Outcome.build(market, {}, {}, {})


def naive_two_sided_vcg(market: MarketInstance) -> Tuple[Outcome, Num]:
    """Textbook two-sided VCG for one item; returns the outcome and its deficit.

    The highest buyer (ties to the earliest) wins and pays the externality
    ``max(seller value, second-highest buyer)``; the seller is paid the
    welfare others lose through her absence, the winner's full value.  The
    deficit is the resulting budget surplus, never positive.
    """
    if len(market.sellers) != 1 or len(market.buyers) < 2:
        raise UnsupportedInstance("deficit demo needs one seller and at least two buyers")
    seller = market.sellers[0]
    scalars = {b.id: b.oracle.value({seller.id}) for b in market.buyers}
    ordered = sorted(market.buyer_ids, key=lambda b: (-scalars[b], market.buyer_ids.index(b)))
    winner, runner_up = ordered[0], ordered[1]
    if scalars[winner] <= seller.value:
        outcome = Outcome.build(market, {}, {}, {})
        return outcome, budget_surplus(outcome)
    charge = max(seller.value, scalars[runner_up])
    outcome = Outcome.build(
        market,
        {winner: [seller.id]},
        {winner: charge},
        {seller.id: scalars[winner]},
    )
    return outcome, budget_surplus(outcome)


# ---------------------------------------------------------------------------
# Uniform harness interface


@dataclass(frozen=True)
class TwoSidedMechanism:
    """A named mechanism with declared guarantees, runnable by the harness."""

    name: str
    run: Callable[[MarketInstance, SampleProfile, RngContract], Outcome]
    budget_mode: Optional[str]  # "wbb" | "sbb" | None (no budget guarantee)
    needs_buyer_samples: bool = False
    randomized: bool = False
    scalar_bids: bool = False
    guarantees: Tuple[str, ...] = field(default_factory=tuple)


def _pairing_gen(rng: RngContract) -> np.random.Generator:
    # fixed stream label so deviation probes can couple the pairing draw
    return rng.labeled("pairing").generator()


def adjusted_vcg_mechanism(budget: int = DEFAULT_EVAL_BUDGET) -> TwoSidedMechanism:
    def run(market, profile, rng):
        return adjusted_vcg(market, profile.seller_samples, budget)

    return TwoSidedMechanism(
        "adjusted-vcg", run, budget_mode="wbb", guarantees=("ir", "dsic", "wbb")
    )


def surplus_vcg_mechanism(budget: int = DEFAULT_EVAL_BUDGET) -> TwoSidedMechanism:
    def run(market, profile, rng):
        return surplus_mechanism(market, profile.seller_samples, ExactVCG(), budget)

    return TwoSidedMechanism(
        "surplus-vcg", run, budget_mode="wbb", guarantees=("ir", "dsic", "wbb")
    )


def reserve_rehearsal_mechanism() -> TwoSidedMechanism:
    def run(market, profile, rng):
        if profile.buyer_samples is None:
            raise StructuralError("reserve_rehearsal needs buyer samples in the profile")
        return reserve_rehearsal(
            market, profile.buyer_samples, profile.seller_samples, rng=_pairing_gen(rng)
        )

    return TwoSidedMechanism(
        "reserve-rehearsal",
        run,
        budget_mode="sbb",
        needs_buyer_samples=True,
        randomized=True,
        scalar_bids=True,
        guarantees=("ir", "dsic", "sbb"),
    )


def pairing_vcg_mechanism(budget: int = DEFAULT_EVAL_BUDGET) -> TwoSidedMechanism:
    def run(market, profile, rng):
        return pairing_reduction(
            market, ExactVCG(), profile.seller_samples, rng=_pairing_gen(rng), budget=budget
        )

    return TwoSidedMechanism(
        "pairing-vcg",
        run,
        budget_mode="sbb",
        randomized=True,
        scalar_bids=True,
        guarantees=("ir", "dsic", "sbb"),
    )


def pairing_rehearsal_mechanism() -> TwoSidedMechanism:
    def run(market, profile, rng):
        if profile.buyer_samples is None:
            raise StructuralError("the rehearsal plug-in needs buyer samples in the profile")
        return pairing_reduction(
            market,
            RehearsalSelector(),
            profile.seller_samples,
            rng=_pairing_gen(rng),
            buyer_samples=profile.buyer_samples,
        )

    return TwoSidedMechanism(
        "pairing-rehearsal",
        run,
        budget_mode="sbb",
        needs_buyer_samples=True,
        randomized=True,
        scalar_bids=True,
        guarantees=("ir", "dsic", "sbb"),
    )


def median_mechanism_spec(seller_median: Num) -> TwoSidedMechanism:
    def run(market, profile, rng):
        return median_mechanism(market, seller_median)

    return TwoSidedMechanism(
        "median",
        run,
        budget_mode="sbb",
        scalar_bids=True,
        guarantees=("ir", "dsic", "sbb"),
    )


def naive_vcg_mechanism() -> TwoSidedMechanism:
    def run(market, profile, rng):
        outcome, _ = naive_two_sided_vcg(market)
        return outcome

    return TwoSidedMechanism(
        "naive-vcg", run, budget_mode=None, scalar_bids=True, guarantees=("ir", "dsic")
    )


MECHANISM_BUILDERS: Dict[str, Callable[..., TwoSidedMechanism]] = {
    "adjusted-vcg": adjusted_vcg_mechanism,
    "surplus-vcg": surplus_vcg_mechanism,
    "reserve-rehearsal": reserve_rehearsal_mechanism,
    "pairing-vcg": pairing_vcg_mechanism,
    "pairing-rehearsal": pairing_rehearsal_mechanism,
    "naive-vcg": naive_vcg_mechanism,
}
