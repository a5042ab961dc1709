"""Exhaustive welfare optimization and VCG pricing.

Everything here reduces to one primitive: over all assignments of items to
buyers (or to nobody), maximize the affine gain

    sum_b value_b(bundle_b)  -  sum over assigned items of weight(item)

subject to a downward-closed constraint on the set of trading buyers.
With item weights equal to seller values this finds the welfare optimum
(welfare = gain + total seller value); with weights equal to sampled prices
it is the adjusted objective the single-sample VCG maximizes; with weights
``max(value, sample)`` it is the raised-cost benchmark used by the gain
inequalities.

The enumerator walks all (n+1)^m assignment codes.  Instances whose numbers
are floats or machine-size ints go through a vectorized numpy path;
instances containing Fractions (or huge ints) take a pure-Python path with
identical semantics.  Ties are broken identically on both paths: highest
objective, then fewest traded items, then the lexicographically smallest
assignment code (items in the given order, buyers in the given order, with
"unsold" sorting last).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .constraints import UNCONSTRAINED, ConstraintSystem, KUniform, Unconstrained
from .constraints import feasible as feasible  # re-exported: membership test
from .errors import CapacityError, UnsupportedInstance
from .market import BuyerSpec, MarketInstance
from .numeric import Num, needs_exact_path
from .valuations import (
    AdditiveValuation,
    DiscountedOracle,
    TableValuation,
    UnitDemandValuation,
    ValuationOracle,
    XOSValuation,
    as_xos_supports,
)

DEFAULT_EVAL_BUDGET = 10_000_000
_BLOCK = 1 << 16
_STRUCT_CACHE: Dict[Tuple[int, int], dict] = {}
_STRUCT_CACHE_LIMIT = 64


@dataclass(frozen=True)
class AllocationCandidate:
    """A feasible allocation with its cached affine objective value."""

    bundles: Mapping[str, FrozenSet[str]]
    objective: Num

    def traded_items(self) -> FrozenSet[str]:
        out: set = set()
        for bundle in self.bundles.values():
            out |= bundle
        return frozenset(out)


def _numeric_values_of(oracle: ValuationOracle) -> List[Num]:
    if isinstance(oracle, AdditiveValuation) or isinstance(oracle, UnitDemandValuation):
        return list(oracle.weights.values())
    if isinstance(oracle, XOSValuation):
        return [w for sup in oracle.supports for w in sup.values()]
    if isinstance(oracle, TableValuation):
        return list(oracle.table.values())
    if isinstance(oracle, DiscountedOracle):
        return _numeric_values_of(oracle.base) + list(oracle.samples.values())
    return []


def _supports_for_table(oracle: ValuationOracle) -> Optional[Sequence[Mapping[str, Num]]]:
    """XOS supports usable for subset-sum tables, or None for oracle-call fallback."""
    if isinstance(oracle, (AdditiveValuation, XOSValuation)):
        return as_xos_supports(oracle)
    if isinstance(oracle, DiscountedOracle):
        if oracle.mode == "exact" and not isinstance(oracle.base, TableValuation):
            return oracle.xos_supports()
        return None
    return None


def _value_table_float(oracle: ValuationOracle, items: Sequence[str]) -> np.ndarray:
    m = len(items)
    if isinstance(oracle, UnitDemandValuation):
        table = np.zeros(1)
        for item in items:
            w = float(oracle.weights.get(item, 0))
            table = np.concatenate([table, np.maximum(table, w)])
        return table
    supports = _supports_for_table(oracle)
    if supports is not None:
        rows = np.zeros((len(supports), 1))
        for j, item in enumerate(items):
            col = np.array([[float(sup.get(item, 0))] for sup in supports])
            rows = np.concatenate([rows, rows + col], axis=1)
        return rows.max(axis=0)
    # general oracle: one call per subset
    table = np.empty(1 << m)
    for mask in range(1 << m):
        bundle = [items[i] for i in range(m) if mask >> i & 1]
        table[mask] = float(oracle.value(bundle))
    return table


def _value_table_exact(oracle: ValuationOracle, items: Sequence[str]) -> List[Num]:
    m = len(items)
    size = 1 << m
    if isinstance(oracle, UnitDemandValuation):
        table: List[Num] = [0] * size
        for mask in range(1, size):
            low = mask & -mask
            w = oracle.weights.get(items[low.bit_length() - 1], 0)
            prev = table[mask ^ low]
            table[mask] = prev if prev > w else w
        return table
    supports = _supports_for_table(oracle)
    if supports is not None:
        best: List[Num] = [0] * size
        for sup in supports:
            row: List[Num] = [0] * size
            for mask in range(1, size):
                low = mask & -mask
                row[mask] = row[mask ^ low] + sup.get(items[low.bit_length() - 1], 0)
            for mask in range(size):
                if row[mask] > best[mask]:
                    best[mask] = row[mask]
        return best
    out: List[Num] = [0] * size
    for mask in range(1, size):
        out[mask] = oracle.value(items[i] for i in range(m) if mask >> i & 1)
    return out


def _weight_sums_exact(weights: Sequence[Num]) -> List[Num]:
    size = 1 << len(weights)
    sums: List[Num] = [0] * size
    for mask in range(1, size):
        low = mask & -mask
        sums[mask] = sums[mask ^ low] + weights[low.bit_length() - 1]
    return sums


def _feasibility_table(constraint: ConstraintSystem, buyer_ids: Sequence[str]) -> Optional[np.ndarray]:
    if isinstance(constraint, Unconstrained):
        return None
    n = len(buyer_ids)
    table = np.empty(1 << n, dtype=bool)
    if isinstance(constraint, KUniform):
        for mask in range(1 << n):
            table[mask] = bin(mask).count("1") <= constraint.k
        return table
    for mask in range(1 << n):
        members = frozenset(buyer_ids[i] for i in range(n) if mask >> i & 1)
        table[mask] = constraint.feasible(members)
    return table


def _structure(n: int, m: int, lo: int, hi: int) -> dict:
    """Vectorized code structure for assignment codes in [lo, hi).

    ``bundles[i][c]`` is buyer i's item bitmask under code c; ``assigned``
    the union bitmask; ``support`` the bitmask of buyers with a non-empty
    bundle.  Item 0 is the most significant digit so ascending codes agree
    with lexicographic digit order.
    """
    total = (n + 1) ** m
    key = (n, m)
    if lo == 0 and hi == total and key in _STRUCT_CACHE:
        return _STRUCT_CACHE[key]
    codes = np.arange(lo, hi, dtype=np.int64)
    bundles = np.zeros((n, hi - lo), dtype=np.int64)
    assigned = np.zeros(hi - lo, dtype=np.int64)
    radix = n + 1
    scale = total
    for j in range(m):
        scale //= radix
        digit = (codes // scale) % radix
        for i in range(n):
            bundles[i] |= (digit == i) << j
        assigned |= (digit < n) << j
    support = np.zeros(hi - lo, dtype=np.int64)
    for i in range(n):
        support |= (bundles[i] != 0) << i
    pop = np.array([bin(mask).count("1") for mask in range(1 << m)], dtype=np.int64)
    struct = {"bundles": bundles, "assigned": assigned, "support": support, "pop": pop, "lo": lo}
    if lo == 0 and hi == total and total <= _BLOCK:
        if len(_STRUCT_CACHE) >= _STRUCT_CACHE_LIMIT:
            _STRUCT_CACHE.clear()
        _STRUCT_CACHE[key] = struct
    return struct


def _argmax_float(
    buyers: Sequence[BuyerSpec],
    items: Sequence[str],
    weights: Mapping[str, Num],
    constraint: ConstraintSystem,
) -> Tuple[int, ...]:
    n, m = len(buyers), len(items)
    tables = [_value_table_float(b.oracle, items) for b in buyers]
    wsums = np.zeros(1)
    for item in items:
        wsums = np.concatenate([wsums, wsums + float(weights[item])])
    feas = _feasibility_table(constraint, [b.id for b in buyers])
    total = (n + 1) ** m
    best: Optional[Tuple[float, int, int]] = None  # (-obj, popcount, code)
    for lo in range(0, total, _BLOCK):
        hi = min(lo + _BLOCK, total)
        st = _structure(n, m, lo, hi)
        obj = -wsums[st["assigned"]]
        for i in range(n):
            obj += tables[i][st["bundles"][i]]
        if feas is not None:
            obj[~feas[st["support"]]] = -np.inf
        top = obj.max()
        if not np.isfinite(top):
            continue
        cand = np.flatnonzero(obj == top)
        counts = st["pop"][st["assigned"][cand]]
        cand = cand[counts == counts.min()]
        entry = (-float(top), int(counts.min()), lo + int(cand[0]))
        if best is None or entry < best:
            best = entry
    if best is None:
        raise UnsupportedInstance("no feasible allocation (constraint rejects the empty set)")
    return _digits_of(best[2], n, m)


def _digits_of(code: int, n: int, m: int) -> Tuple[int, ...]:
    digits = []
    radix = n + 1
    for _ in range(m):
        digits.append(code % radix)
        code //= radix
    return tuple(reversed(digits))


def _argmax_exact(
    buyers: Sequence[BuyerSpec],
    items: Sequence[str],
    weights: Mapping[str, Num],
    constraint: ConstraintSystem,
) -> Tuple[int, ...]:
    n, m = len(buyers), len(items)
    tables = [_value_table_exact(b.oracle, items) for b in buyers]
    wsums = _weight_sums_exact([weights[item] for item in items])
    feas = _feasibility_table(constraint, [b.id for b in buyers])
    best_digits: Optional[Tuple[int, ...]] = None
    best_obj: Num = 0
    best_count = 0
    for digits in itertools.product(range(n + 1), repeat=m):
        masks = [0] * n
        assigned = 0
        for j in range(m):
            d = digits[j]
            if d < n:
                bit = 1 << j
                masks[d] |= bit
                assigned |= bit
        if feas is not None:
            support = 0
            for i in range(n):
                if masks[i]:
                    support |= 1 << i
            if not feas[support]:
                continue
        obj: Num = -wsums[assigned]
        for i in range(n):
            obj = obj + tables[i][masks[i]]
        count = bin(assigned).count("1")
        if (
            best_digits is None
            or obj > best_obj
            or (obj == best_obj and count < best_count)
        ):
            best_digits, best_obj, best_count = digits, obj, count
    if best_digits is None:
        raise UnsupportedInstance("no feasible allocation (constraint rejects the empty set)")
    return best_digits


def affine_argmax(
    buyers: Sequence[BuyerSpec],
    items: Sequence[str],
    weights: Mapping[str, Num],
    constraint: ConstraintSystem = UNCONSTRAINED,
    budget: int = DEFAULT_EVAL_BUDGET,
) -> AllocationCandidate:
    """Exact maximizer of ``sum_b v_b(S_b) - sum assigned weights``.

    The objective of the returned candidate is recomputed from the oracles
    with plain Python arithmetic, so rational instances stay exact no
    matter which enumeration path ran.
    """
    n, m = len(buyers), len(items)
    total = (n + 1) ** m
    if total > budget:
        raise CapacityError(
            f"{total} allocations exceed the enumeration budget of {budget}"
        )
    if m == 0 or n == 0:
        return AllocationCandidate({b.id: frozenset() for b in buyers}, 0)
    numbers = [weights[item] for item in items]
    for b in buyers:
        numbers.extend(_numeric_values_of(b.oracle))
    if needs_exact_path(numbers):
        digits = _argmax_exact(buyers, items, weights, constraint)
    else:
        digits = _argmax_float(buyers, items, weights, constraint)
    bundles: Dict[str, FrozenSet[str]] = {}
    objective: Num = 0
    for i, b in enumerate(buyers):
        bundle = frozenset(items[j] for j in range(m) if digits[j] == i)
        bundles[b.id] = bundle
        if bundle:
            objective += b.oracle.value(bundle) - sum(weights[s] for s in bundle)
    return AllocationCandidate(bundles, objective)


def _opt_identical_greedy(market: MarketInstance, k_limit: int) -> Tuple[AllocationCandidate, Num]:
    """Welfare optimum for identical items and unit-demand buyers.

    Exact by an exchange argument: match the highest buyers with the
    cheapest sellers while the gain is strictly positive.
    """
    scalars = market.scalar_buyer_values()
    bpos = {b: i for i, b in enumerate(market.buyer_ids)}
    spos = {s: i for i, s in enumerate(market.seller_ids)}
    buyers_sorted = sorted(market.buyer_ids, key=lambda b: (-scalars[b], bpos[b]))
    sellers_sorted = sorted(market.seller_ids, key=lambda s: (market.value_of(s), spos[s]))
    bundles: Dict[str, FrozenSet[str]] = {b: frozenset() for b in market.buyer_ids}
    gain: Num = 0
    trades = 0
    for b, s in zip(buyers_sorted, sellers_sorted):
        if trades >= k_limit:
            break
        if scalars[b] > market.value_of(s):
            bundles[b] = frozenset([s])
            gain += scalars[b] - market.value_of(s)
            trades += 1
        else:
            break
    total_seller: Num = sum(market.seller_values.values())
    return AllocationCandidate(bundles, gain), gain + total_seller


def opt_welfare(
    market: MarketInstance, budget: int = DEFAULT_EVAL_BUDGET
) -> Tuple[AllocationCandidate, Num]:
    """The feasible allocation maximizing social welfare, plus its welfare.

    Identical-item markets with unit-demand buyers under no constraint (or
    a k-uniform one) use a greedy matching that is exact at any scale;
    everything else is enumerated within the evaluation budget.
    """
    if market.items_identical and all(
        isinstance(b.oracle, UnitDemandValuation) for b in market.buyers
    ):
        cs = market.constraint
        if isinstance(cs, Unconstrained):
            return _opt_identical_greedy(market, min(len(market.buyers), len(market.sellers)))
        if isinstance(cs, KUniform):
            return _opt_identical_greedy(market, min(cs.k, len(market.buyers), len(market.sellers)))
    cand = affine_argmax(
        market.buyers, list(market.seller_ids), market.seller_values, market.constraint, budget
    )
    sw = cand.objective + sum(market.seller_values.values())
    return cand, sw


def max_adjusted_welfare(
    buyers: Sequence[BuyerSpec],
    available: Sequence[str],
    samples: Mapping[str, Num],
    constraint: ConstraintSystem = UNCONSTRAINED,
    budget: int = DEFAULT_EVAL_BUDGET,
) -> AllocationCandidate:
    """Maximize buyer value minus sampled prices over the accepted sellers.

    Bundles in the result are inclusion-minimal for their value: an item
    whose marginal value is below its sample strictly hurts the objective,
    and one that exactly matches it is dropped by the fewest-items
    tie-break.
    """
    return affine_argmax(buyers, list(available), samples, constraint, budget)


def vcg_payments(
    buyers: Sequence[BuyerSpec],
    available: Sequence[str],
    samples: Mapping[str, Num],
    constraint: ConstraintSystem,
    chosen: AllocationCandidate,
    budget: int = DEFAULT_EVAL_BUDGET,
) -> Dict[str, Num]:
    """Internal VCG prices for the adjusted objective.

    ``p_b = (best objective without b) - (others' objective under chosen)``.
    Buyers with empty bundles pay zero: removing them cannot change the
    optimum, so their externality vanishes.  The full mechanism charge is
    this price plus the samples of the assigned items.
    """
    payments: Dict[str, Num] = {}
    for idx, b in enumerate(buyers):
        bundle = chosen.bundles.get(b.id, frozenset())
        if not bundle:
            payments[b.id] = 0
            continue
        own_gain = b.oracle.value(bundle) - sum(samples[s] for s in bundle)
        others = chosen.objective - own_gain
        rest = [x for i, x in enumerate(buyers) if i != idx]
        without = affine_argmax(rest, list(available), samples, constraint, budget)
        payments[b.id] = without.objective - others
    return payments


def opt_with_raised_costs(
    market: MarketInstance,
    samples: Mapping[str, Num],
    budget: int = DEFAULT_EVAL_BUDGET,
) -> Tuple[AllocationCandidate, Num]:
    """Benchmark optimum with each seller cost raised to max(value, sample).

    Returns the maximizing allocation and its total adjusted gain; buyers
    whose best option is empty contribute zero.
    """
    weights = {
        s: max(market.value_of(s), samples[s]) for s in market.seller_ids
    }
    cand = affine_argmax(
        market.buyers, list(market.seller_ids), weights, market.constraint, budget
    )
    return cand, cand.objective
