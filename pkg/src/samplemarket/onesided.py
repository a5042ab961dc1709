"""One-sided plug-in mechanisms.

The two-sided reductions compose with one-sided mechanisms through two
narrow interfaces: a combinatorial one (buyers with valuation oracles over
an item set) used by the sampled-price reduction, and a binary
single-parameter one (scalar bids, win or lose) used by the random-pairing
reduction for identical items.  Only two plug-ins are implemented: exact
VCG (the alpha = 1 baseline, offline and prior-free) and the
threshold-deletion selector driven by one sample per buyer (fixed buyer
order).  The interfaces accommodate other one-sided mechanisms unchanged.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .constraints import UNCONSTRAINED, ConstraintSystem, Intersection, KUniform, Unconstrained
from .errors import CapacityError, StructuralError, UnsupportedInstance
from .market import BuyerSpec
from .numeric import Num
from .optengine import DEFAULT_EVAL_BUDGET, AllocationCandidate, affine_argmax, vcg_payments


class OneSidedMechanism:
    """Declared interaction model of a one-sided plug-in."""

    name: str = "abstract"
    arrival: str = "offline"  # offline | fixed-order | random-order
    info: str = "prior-free"  # prior-free | single-sample | full-prior

    def run_combinatorial(
        self,
        buyers: Sequence[BuyerSpec],
        items: Sequence[str],
        constraint: ConstraintSystem = UNCONSTRAINED,
        budget: int = DEFAULT_EVAL_BUDGET,
    ) -> Tuple[AllocationCandidate, Dict[str, Num]]:
        raise UnsupportedInstance(f"{self.name} has no combinatorial interface")

    def select(
        self,
        values: Mapping[str, Num],
        constraint: ConstraintSystem,
        k: int,
        *,
        samples: Optional[Mapping[str, Num]] = None,
        order: Optional[Sequence[str]] = None,
        budget: int = DEFAULT_EVAL_BUDGET,
    ) -> Tuple[Tuple[str, ...], Dict[str, Num]]:
        raise UnsupportedInstance(f"{self.name} has no binary interface")


class ExactVCG(OneSidedMechanism):
    """Welfare-maximizing allocation with externality payments.

    IR and DSIC by construction; serves as the alpha = 1 plug-in on both
    interfaces.
    """

    name = "exact-vcg"
    arrival = "offline"
    info = "prior-free"

    def run_combinatorial(self, buyers, items, constraint=UNCONSTRAINED, budget=DEFAULT_EVAL_BUDGET):
        zero = {item: 0 for item in items}
        chosen = affine_argmax(buyers, list(items), zero, constraint, budget)
        payments = vcg_payments(buyers, list(items), zero, constraint, chosen, budget)
        return chosen, payments

    def select(self, values, constraint, k, *, samples=None, order=None, budget=DEFAULT_EVAL_BUDGET):
        bidders = list(values)
        n = len(bidders)
        if 2**n > budget:
            raise CapacityError(f"{2**n} bidder subsets exceed the enumeration budget of {budget}")
        cs = constraint.intersect(KUniform(k))
        best_mask = 0
        best_total: Num = 0
        best_size = 0
        # per-bidder best total over feasible sets excluding the bidder
        best_without: List[Num] = [0] * n
        for mask in range(1 << n):
            members = frozenset(bidders[i] for i in range(n) if mask >> i & 1)
            if not cs.feasible(members):
                continue
            total: Num = sum(values[b] for b in members)
            size = len(members)
            if total > best_total or (total == best_total and size < best_size):
                best_mask, best_total, best_size = mask, total, size
            for i in range(n):
                if not mask >> i & 1 and total > best_without[i]:
                    best_without[i] = total
        winners = tuple(bidders[i] for i in range(n) if best_mask >> i & 1)
        prices: Dict[str, Num] = {}
        for i, b in enumerate(bidders):
            if best_mask >> i & 1:
                prices[b] = best_without[i] - (best_total - values[b])
        return winners, prices


def _ceil_sqrt(k: int) -> int:
    root = math.isqrt(k)
    return root if root * root == k else root + 1


def rehearsal_thresholds(samples: Sequence[Num], k: int) -> Tuple[List[Num], Num]:
    """Price multiset and its minimum for the threshold-deletion selector.

    With k trading slots the multiset holds the ``k - 2*ceil(sqrt(k))``
    largest samples padded with copies of the smallest of those, for k
    slots in total.  When that count drops below one (small k) it degrades
    to k copies of the largest sample, so the reserve is the max sample.
    Returned ascending.
    """
    if k < 1:
        raise StructuralError("need at least one trading slot")
    if len(samples) < k:
        raise StructuralError(f"need at least k={k} buyer samples, got {len(samples)}")
    ordered = sorted(samples, reverse=True)
    base = k - 2 * _ceil_sqrt(k)
    if base < 1:
        prices = [ordered[0]] * k
    else:
        prices = ordered[:base] + [ordered[base - 1]] * (k - base)
    prices.reverse()
    return prices, prices[0]


def _only_cardinality_bounds(cs: ConstraintSystem) -> Optional[int]:
    """Effective k if the constraint is purely cardinality-based, else raise."""
    if isinstance(cs, Unconstrained):
        return None
    if isinstance(cs, KUniform):
        return cs.k
    if isinstance(cs, Intersection):
        left = _only_cardinality_bounds(cs.first)
        right = _only_cardinality_bounds(cs.second)
        if left is None:
            return right
        if right is None:
            return left
        return min(left, right)
    raise UnsupportedInstance("threshold selector handles cardinality constraints only")


class RehearsalSelector(OneSidedMechanism):
    """Online fixed-order selection against a sample-built price multiset.

    Walks the buyers in order; a buyer beating the reserve consumes the
    highest price she beats.  Winners are charged the reserve (the multiset
    minimum).  Uses one sample per buyer and no other prior information.
    """

    name = "rehearsal"
    arrival = "fixed-order"
    info = "single-sample"

    def select(self, values, constraint, k, *, samples=None, order=None, budget=DEFAULT_EVAL_BUDGET):
        if samples is None:
            raise StructuralError("threshold selector requires one sample per buyer")
        cap = _only_cardinality_bounds(constraint)
        if cap is not None and cap < k:
            k = cap
        if k < 1:
            return (), {}
        order = list(order) if order is not None else list(values)
        missing = [b for b in order if b not in samples]
        if missing:
            raise StructuralError(f"missing buyer samples: {missing}")
        prices, reserve = rehearsal_thresholds([samples[b] for b in order], k)
        winners: List[str] = []
        for b in order:
            v = values[b]
            if v > reserve and prices and prices[0] < v:
                idx = bisect_left(prices, v) - 1
                prices.pop(idx)
                winners.append(b)
        return tuple(winners), {b: reserve for b in winners}


def exact_vcg_onesided(
    buyers: Sequence[BuyerSpec],
    items: Sequence[str],
    constraint: ConstraintSystem = UNCONSTRAINED,
    budget: int = DEFAULT_EVAL_BUDGET,
) -> Tuple[AllocationCandidate, Dict[str, Num]]:
    """Welfare-maximizing one-sided allocation with VCG payments."""
    return ExactVCG().run_combinatorial(buyers, items, constraint, budget)


def rehearsal_selector(
    values: Mapping[str, Num],
    samples: Mapping[str, Num],
    order: Optional[Sequence[str]] = None,
    k: Optional[int] = None,
) -> Tuple[Tuple[str, ...], Dict[str, Num]]:
    """Standalone threshold-deletion selection (no seller pairing).

    Returns the winners in acceptance order and their uniform price, the
    reserve.  ``k`` defaults to the number of buyers.
    """
    if k is None:
        k = len(values)
    return RehearsalSelector().select(values, UNCONSTRAINED, k, samples=samples, order=order)
