"""Buyer valuation oracles and the sample-discount transforms.

Four oracle classes are supported: additive, unit-demand, XOS (a max over
finitely many additive support functions), and explicit tables for general
subadditive functions.  On top of them sit the discount transforms used by
the two-sided mechanisms: given one sampled price per seller and the set of
sellers who accepted their sample, a buyer's valuation is reduced by the
sampled cost of whatever she would buy.

Two variants exist.  The *exact* variant optimizes over sub-bundles::

    value(S) = max over T subset of (S & available) of  v(T) - sum of samples over T

and reports the maximizing witness (smallest, then lexicographic).  The
*linear* variant skips the inner optimization: it takes the additive support
attaining v(S), subtracts samples over S & available, and clips at zero.
Both preserve the XOS class; the exact variant additionally has an explicit
XOS representation computed by :func:`discount_xos_supports`.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

from .errors import CapacityError, UnsupportedInstance
from .numeric import Num, is_exact

DEFAULT_WITNESS_CAP = 20
SUBADDITIVE_UNIVERSE_CAP = 12

SellerSet = FrozenSet[str]


def _freeze(weights: Mapping[str, Num]) -> Dict[str, Num]:
    out = {}
    for key, w in weights.items():
        if w < 0:
            raise ValueError(f"negative weight for {key!r}")
        out[str(key)] = w
    return out


class ValuationOracle:
    """Maps seller subsets to non-negative values; immutable."""

    class_tag: str

    def value(self, bundle: Iterable[str]) -> Num:
        raise NotImplementedError

    @property
    def is_exact(self) -> bool:
        raise NotImplementedError

    def to_json(self, mode: str) -> dict:
        raise NotImplementedError


class AdditiveValuation(ValuationOracle):
    class_tag = "additive"

    def __init__(self, weights: Mapping[str, Num]):
        self.weights = _freeze(weights)

    def value(self, bundle):
        w = self.weights
        return sum((w[s] for s in bundle if s in w), 0)

    @property
    def is_exact(self):
        return all(is_exact(w) for w in self.weights.values())

    def __eq__(self, other):
        return isinstance(other, AdditiveValuation) and self.weights == other.weights

    def __repr__(self):
        return f"AdditiveValuation({self.weights!r})"

    def to_json(self, mode):
        from .numeric import format_value

        return {"class": "additive", "weights": {s: format_value(w, mode) for s, w in self.weights.items()}}


class UnitDemandValuation(ValuationOracle):
    class_tag = "unit-demand"

    def __init__(self, weights: Mapping[str, Num]):
        self.weights = _freeze(weights)

    def value(self, bundle):
        w = self.weights
        vals = [w[s] for s in bundle if s in w]
        return max(vals) if vals else 0

    @property
    def is_exact(self):
        return all(is_exact(w) for w in self.weights.values())

    def __eq__(self, other):
        return isinstance(other, UnitDemandValuation) and self.weights == other.weights

    def __repr__(self):
        return f"UnitDemandValuation({self.weights!r})"

    def to_json(self, mode):
        from .numeric import format_value

        return {"class": "unit-demand", "weights": {s: format_value(w, mode) for s, w in self.weights.items()}}


class XOSValuation(ValuationOracle):
    """Pointwise max of additive support functions."""

    class_tag = "xos"

    def __init__(self, supports: Sequence[Mapping[str, Num]]):
        if not supports:
            raise ValueError("XOS valuation needs at least one support")
        self.supports = tuple(_freeze(sup) for sup in supports)

    def value(self, bundle):
        bundle = list(bundle)
        best = 0
        for sup in self.supports:
            total = sum((sup[s] for s in bundle if s in sup), 0)
            if total > best:
                best = total
        return best

    @property
    def is_exact(self):
        return all(is_exact(w) for sup in self.supports for w in sup.values())

    def __eq__(self, other):
        return isinstance(other, XOSValuation) and self.supports == other.supports

    def __repr__(self):
        return f"XOSValuation({list(self.supports)!r})"

    def to_json(self, mode):
        from .numeric import format_value

        return {
            "class": "xos",
            "supports": [{s: format_value(w, mode) for s, w in sup.items()} for sup in self.supports],
        }


class TableValuation(ValuationOracle):
    """Explicit value table over every subset of a fixed universe.

    Used for general subadditive functions that have no compact support
    representation.  The table is structural only; subadditivity is a
    property checked by :func:`is_subadditive`.  Tables need not be
    monotone (see :func:`is_monotone`).
    """

    class_tag = "table"

    def __init__(self, universe: Sequence[str], values: Mapping[FrozenSet[str], Num]):
        self.universe = tuple(sorted(str(u) for u in universe))
        if len(set(self.universe)) != len(self.universe):
            raise ValueError("duplicate ids in table universe")
        table = {}
        for subset, v in values.items():
            key = frozenset(subset)
            if not key <= set(self.universe):
                raise ValueError(f"table key {sorted(key)} outside universe")
            if v < 0:
                raise ValueError("table values must be non-negative")
            table[key] = v
        if len(table) != 2 ** len(self.universe):
            raise ValueError("table must cover every subset of the universe")
        if table[frozenset()] != 0:
            raise ValueError("table must assign 0 to the empty set")
        self.table = table

    def value(self, bundle):
        key = frozenset(bundle) & frozenset(self.universe)
        return self.table[key]

    @property
    def is_exact(self):
        return all(is_exact(v) for v in self.table.values())

    def __eq__(self, other):
        return isinstance(other, TableValuation) and self.table == other.table

    def __repr__(self):
        return f"TableValuation(universe={self.universe!r})"

    def to_json(self, mode):
        from .numeric import format_value

        return {
            "class": "table",
            "universe": list(self.universe),
            "values": {",".join(sorted(k)): format_value(v, mode) for k, v in self.table.items()},
        }


def oracle_from_json(data: dict, mode: str) -> ValuationOracle:
    from .numeric import parse_value

    cls = data.get("class")
    if cls == "additive":
        return AdditiveValuation({s: parse_value(w, mode) for s, w in data["weights"].items()})
    if cls == "unit-demand":
        return UnitDemandValuation({s: parse_value(w, mode) for s, w in data["weights"].items()})
    if cls == "xos":
        return XOSValuation([{s: parse_value(w, mode) for s, w in sup.items()} for sup in data["supports"]])
    if cls == "table":
        values = {
            frozenset(k.split(",")) if k else frozenset(): parse_value(v, mode)
            for k, v in data["values"].items()
        }
        return TableValuation(data["universe"], values)
    raise ValueError(f"unknown oracle class {cls!r}")


def evaluate(oracle: ValuationOracle, bundle: Iterable[str]) -> Num:
    """Value of a seller subset under the oracle."""
    return oracle.value(bundle)


def as_xos_supports(oracle: ValuationOracle) -> Tuple[Dict[str, Num], ...]:
    """XOS support list for oracles that have one.

    Additive functions are a single support; unit-demand functions are the
    max over per-seller singletons.  Table oracles raise.
    """
    if isinstance(oracle, AdditiveValuation):
        return (dict(oracle.weights),)
    if isinstance(oracle, UnitDemandValuation):
        if not oracle.weights:
            return ({},)
        return tuple({s: w} for s, w in sorted(oracle.weights.items()))
    if isinstance(oracle, XOSValuation):
        return tuple(dict(sup) for sup in oracle.supports)
    if isinstance(oracle, DiscountedOracle):
        return oracle.xos_supports()
    raise UnsupportedInstance(f"{oracle.class_tag} oracle has no XOS support list")


def supporting_weights(oracle: ValuationOracle, bundle: Iterable[str]) -> Dict[str, Num]:
    """The additive support attaining value(bundle).

    Ties go to the first support in declaration order (for unit-demand:
    the lexicographically smallest seller among maximum weights).
    """
    bundle = set(bundle)
    if isinstance(oracle, AdditiveValuation):
        return dict(oracle.weights)
    if isinstance(oracle, UnitDemandValuation):
        present = [(s, w) for s, w in oracle.weights.items() if s in bundle]
        if not present:
            return {}
        best = max(w for _, w in present)
        winner = min(s for s, w in present if w == best)
        return {winner: best}
    if isinstance(oracle, (XOSValuation, DiscountedOracle)):
        supports = as_xos_supports(oracle)
        target = oracle.value(bundle)
        for sup in supports:
            if sum((sup[s] for s in bundle if s in sup), 0) == target:
                return dict(sup)
        # floats can in principle round max() differently; fall back to argmax
        sums = [sum((sup[s] for s in bundle if s in sup), 0) for sup in supports]
        return dict(supports[max(range(len(supports)), key=lambda i: sums[i])])
    raise UnsupportedInstance(f"{oracle.class_tag} oracle has no supporting function")


def discounted_value_exact(
    oracle: ValuationOracle,
    samples: Mapping[str, Num],
    available: Iterable[str],
    bundle: Iterable[str],
    cap: int = DEFAULT_WITNESS_CAP,
) -> Tuple[Num, SellerSet]:
    """Best surplus over sub-bundles of available items, with its witness.

    Enumerates every subset of ``bundle & available`` and maximizes
    ``v(T) - sum(samples[s] for s in T)``; the empty set always competes,
    so the result is never negative.  Among maximizers the witness is the
    smallest set, ties broken lexicographically by seller id.
    """
    ground = sorted(set(bundle) & set(available))
    if len(ground) > cap:
        raise CapacityError(f"witness search over {len(ground)} items exceeds cap {cap}")
    best_value: Num = 0
    best_witness: Tuple[str, ...] = ()
    for size in range(1, len(ground) + 1):
        for combo in combinations(ground, size):
            util = oracle.value(combo) - sum(samples[s] for s in combo)
            if util > best_value:
                best_value = util
                best_witness = combo
    return best_value, frozenset(best_witness)


def discounted_value_linear(
    oracle: ValuationOracle,
    samples: Mapping[str, Num],
    available: Iterable[str],
    bundle: Iterable[str],
) -> Num:
    """Clipped surplus of the bundle's own supporting function.

    Uses the additive support attaining v(bundle), charges samples on the
    available part only, and clips the total at zero.  Cheaper than the
    exact variant and never above it.
    """
    bundle = set(bundle)
    avail = bundle & set(available)
    support = supporting_weights(oracle, bundle)
    total = sum((support.get(s, 0) - samples[s] for s in avail), 0)
    return total if total > 0 else 0


def discount_xos_supports(
    supports: Sequence[Mapping[str, Num]],
    samples: Mapping[str, Num],
    available: Iterable[str],
    mode: str = "exact",
) -> Tuple[Dict[str, Num], ...]:
    """Discount each XOS support by the sampled prices.

    Exact mode clips each weight at zero, which makes the max over the
    returned supports coincide with :func:`discounted_value_exact` on every
    bundle.  Linear mode keeps signed weights and appends an all-zero
    support so the max stays non-negative.
    """
    avail = set(available)
    out = []
    for sup in supports:
        adjusted: Dict[str, Num] = {}
        for s, w in sup.items():
            if s not in avail:
                continue
            delta = w - samples[s]
            if mode == "exact":
                if delta > 0:
                    adjusted[s] = delta
            else:
                adjusted[s] = delta
        out.append(adjusted)
    if mode == "linear":
        out.append({})
    elif mode != "exact":
        raise ValueError(f"unknown discount mode {mode!r}")
    return tuple(out)


class DiscountedOracle(ValuationOracle):
    """A buyer valuation reduced by sampled seller prices.

    ``mode="exact"`` evaluates the sub-bundle optimum (and stays XOS via
    :func:`discount_xos_supports`); ``mode="linear"`` evaluates the clipped
    supporting-function surplus.
    """

    def __init__(
        self,
        base: ValuationOracle,
        samples: Mapping[str, Num],
        available: Iterable[str],
        mode: str = "exact",
        cap: int = DEFAULT_WITNESS_CAP,
    ):
        if mode not in ("exact", "linear"):
            raise ValueError(f"unknown discount mode {mode!r}")
        self.base = base
        self.samples = dict(samples)
        self.available = frozenset(available)
        self.mode = mode
        self.cap = cap
        self._supports: Optional[Tuple[Dict[str, Num], ...]] = None
        if not isinstance(base, TableValuation):
            self._supports = discount_xos_supports(
                as_xos_supports(base), self.samples, self.available, mode=mode
            )

    @property
    def class_tag(self):  # type: ignore[override]
        return "table" if isinstance(self.base, TableValuation) else "xos"

    def xos_supports(self) -> Tuple[Dict[str, Num], ...]:
        if self._supports is None:
            raise UnsupportedInstance("table-backed discounted oracle has no XOS supports")
        return self._supports

    def value(self, bundle):
        if self.mode == "linear":
            return discounted_value_linear(self.base, self.samples, self.available, bundle)
        if self._supports is not None:
            bundle = list(bundle)
            best = 0
            for sup in self._supports:
                total = sum((sup[s] for s in bundle if s in sup), 0)
                if total > best:
                    best = total
            return best
        value, _ = discounted_value_exact(self.base, self.samples, self.available, bundle, self.cap)
        return value

    def witness(self, bundle) -> Tuple[Num, SellerSet]:
        """Exact surplus and its minimal witness (brute force)."""
        return discounted_value_exact(self.base, self.samples, self.available, bundle, self.cap)

    @property
    def is_exact(self):
        return self.base.is_exact and all(is_exact(v) for v in self.samples.values())

    def __repr__(self):
        return f"DiscountedOracle(base={self.base!r}, mode={self.mode!r})"


def scale_oracle(oracle: ValuationOracle, factor: Num) -> ValuationOracle:
    """Rescale all values by a non-negative factor, preserving the class."""
    if factor < 0:
        raise ValueError("scale factor must be non-negative")
    if isinstance(oracle, AdditiveValuation):
        return AdditiveValuation({s: w * factor for s, w in oracle.weights.items()})
    if isinstance(oracle, UnitDemandValuation):
        return UnitDemandValuation({s: w * factor for s, w in oracle.weights.items()})
    if isinstance(oracle, XOSValuation):
        return XOSValuation([{s: w * factor for s, w in sup.items()} for sup in oracle.supports])
    if isinstance(oracle, TableValuation):
        return TableValuation(oracle.universe, {k: v * factor for k, v in oracle.table.items()})
    raise UnsupportedInstance(f"cannot scale {oracle.class_tag} oracle")


def restrict_oracle(oracle: ValuationOracle, keep: Iterable[str]) -> ValuationOracle:
    """Truncate the bundle lattice: the result values S as v(S & keep)."""
    keep = set(keep)
    if isinstance(oracle, AdditiveValuation):
        return AdditiveValuation({s: w for s, w in oracle.weights.items() if s in keep})
    if isinstance(oracle, UnitDemandValuation):
        return UnitDemandValuation({s: w for s, w in oracle.weights.items() if s in keep})
    if isinstance(oracle, XOSValuation):
        return XOSValuation([{s: w for s, w in sup.items() if s in keep} for sup in oracle.supports])
    if isinstance(oracle, TableValuation):
        return TableValuation(
            oracle.universe, {k: oracle.table[frozenset(k) & keep] for k in oracle.table}
        )
    raise UnsupportedInstance(f"cannot restrict {oracle.class_tag} oracle")


def _table_as_list(oracle: TableValuation):
    universe = oracle.universe
    size = 1 << len(universe)
    values = [0] * size
    for mask in range(size):
        subset = frozenset(universe[i] for i in range(len(universe)) if mask >> i & 1)
        values[mask] = oracle.table[subset]
    return universe, values


def is_subadditive(oracle: ValuationOracle):
    """Exhaustive subadditivity check for table oracles.

    Returns ``(True, None)`` or ``(False, (S1, S2))`` with a violating pair
    where v(S1 | S2) > v(S1) + v(S2).
    """
    if not isinstance(oracle, TableValuation):
        raise UnsupportedInstance("subadditivity check requires an explicit table oracle")
    universe, values = _table_as_list(oracle)
    n = len(universe)
    if n > SUBADDITIVE_UNIVERSE_CAP:
        raise CapacityError(f"universe of {n} exceeds cap {SUBADDITIVE_UNIVERSE_CAP}")
    size = 1 << n
    for m1 in range(size):
        v1 = values[m1]
        for m2 in range(size):
            if values[m1 | m2] > v1 + values[m2]:
                pair = (
                    frozenset(universe[i] for i in range(n) if m1 >> i & 1),
                    frozenset(universe[i] for i in range(n) if m2 >> i & 1),
                )
                return False, pair
    return True, None


def is_monotone(oracle: ValuationOracle) -> bool:
    """Optional predicate: v(S) <= v(T) whenever S is a subset of T."""
    if not isinstance(oracle, TableValuation):
        return True  # weight-based classes are monotone by construction
    universe, values = _table_as_list(oracle)
    n = len(universe)
    for mask in range(1 << n):
        for i in range(n):
            if mask >> i & 1 and values[mask] < values[mask ^ (1 << i)]:
                return False
    return True


def half_sample_expectation(oracle: ValuationOracle) -> Tuple[Num, Num]:
    """Both sides of the half-sampling inequality for a table function.

    Returns ``(E[f(X)], f(N)/2)`` where X includes each universe element
    independently with probability 1/2.  The expectation is computed by
    enumerating all subsets with weight 2^-n, exactly on rational tables.
    """
    if not isinstance(oracle, TableValuation):
        raise UnsupportedInstance("half-sampling expectation requires a table oracle")
    universe, values = _table_as_list(oracle)
    n = len(universe)
    if n > SUBADDITIVE_UNIVERSE_CAP:
        raise CapacityError(f"universe of {n} exceeds cap {SUBADDITIVE_UNIVERSE_CAP}")
    total = sum(values)
    full = values[-1]
    if oracle.is_exact:
        return Fraction(total, 1 << n), Fraction(full, 2)
    return total / (1 << n), full / 2
