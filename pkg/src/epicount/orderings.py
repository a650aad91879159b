"""Ordering families f_n and their integrals against moment measures.

An ordering assigns each isomorphism-class handle a real weight depending on
the index n.  Every bundled family has finite support per n, enumerated in
canonical handle order; an infinite-support ordering must instead carry a
tail certificate (an enumerated head plus a declared bound on the skipped
L1 mass), and integrating one without a certificate is an error rather than
a silent truncation.

The two hot families (singleton indicators on subsets, prime-indexed weights
on abelian groups) also expose vectorized hooks keyed by the integer that
parameterizes their support (the element m, the prime p), which the
experiment harness and the bound calculators use to evaluate whole n-grids
from cumulative sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional

import numpy as np

from .abgroups import AbGroup, CorankSample
from .core import CategoryInstance, MomentMeasure
from .errors import ConfigError, OutOfHorizonError, ScopeError, UncertifiedTailError
from .primes import is_prime, primes_up_to
from .subsets import FinSet, SubsetSample, SubsetsMeasure


@dataclass(frozen=True)
class Ordering:
    """One ordering family.

    eval_fn(n, handle) must return 0.0 for every handle outside support(n).
    support_fn(n) yields handles in ascending handle order.  The optional
    vector_support_fn(n) returns (keys, phi): the integer keys of the
    support in ascending order and phi = |f_n| at each key; it exists only
    for families whose support is keyed by a single integer.
    """

    family_id: str
    instance_tag: str
    eval_fn: Callable[[int, Any], float]
    support_fn: Optional[Callable[[int], Iterable]] = None
    tail_enum_fn: Optional[Callable[[int], Iterable]] = None
    tail_eps_fn: Optional[Callable[[int], float]] = None
    nonnegative: bool = False
    monotone_in_n: bool = False  # f_{n+1} >= f_n pointwise
    vector_support_fn: Optional[Callable[[int], tuple]] = None
    grid_count_fn: Optional[Callable[[Any, np.ndarray], np.ndarray]] = None
    moment_grid_fn: Optional[Callable[[MomentMeasure, np.ndarray], np.ndarray]] = None

    def value(self, n: int, g) -> float:
        return float(self.eval_fn(int(n), g))


@dataclass(frozen=True)
class MomentResult:
    """An integral value plus the certified bound on the skipped tail mass
    (zero when the support was enumerated exhaustively)."""

    value: float
    tail_eps: float = 0.0

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class OrderingMoments:
    """Per-checkpoint integrals of one ordering against one measure."""

    n_grid: tuple[int, ...]
    integrals: np.ndarray      # int f_n dM
    abs_integrals: np.ndarray  # int |f_n| dM
    tail_eps: np.ndarray
    monotone: bool             # integrals nondecreasing (pointwise-monotone f, M >= 0)


def moment_integral(f: Ordering, n: int, measure: MomentMeasure,
                    absolute: bool = False) -> MomentResult:
    """Sum f_n(G) * M_G (or |f_n| * M_G) over the support in handle order.

    Reference implementation; grids should go through moment_grid, which
    dispatches to the family's vectorized hook when one exists.
    """
    if f.support_fn is not None:
        total = 0.0
        for g in f.support_fn(n):
            v = f.value(n, g)
            total += (abs(v) if absolute else v) * measure.value(g)
        return MomentResult(total, 0.0)
    if f.tail_enum_fn is not None and f.tail_eps_fn is not None:
        total = 0.0
        for g in f.tail_enum_fn(n):
            v = f.value(n, g)
            total += (abs(v) if absolute else v) * measure.value(g)
        return MomentResult(total, float(f.tail_eps_fn(n)))
    raise UncertifiedTailError(
        f"ordering {f.family_id!r} has infinite support and no tail certificate"
    )


def moment_grid(f: Ordering, n_grid, measure: MomentMeasure,
                absolute: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """(integrals, tail_eps) over an ascending n-grid."""
    grid = np.asarray(n_grid, dtype=np.int64)
    if f.moment_grid_fn is not None and (not absolute or f.nonnegative):
        vals = f.moment_grid_fn(measure, grid)
        if vals is not None:
            return np.asarray(vals, dtype=np.float64), np.zeros(len(grid))
    out = np.empty(len(grid), dtype=np.float64)
    eps = np.empty(len(grid), dtype=np.float64)
    for i, n in enumerate(grid):
        res = moment_integral(f, int(n), measure, absolute=absolute)
        out[i] = res.value
        eps[i] = res.tail_eps
    return out, eps


def ordering_moments(f: Ordering, n_grid, measure: MomentMeasure) -> OrderingMoments:
    vals, eps = moment_grid(f, n_grid, measure, absolute=False)
    if f.nonnegative:
        abs_vals = vals
    else:
        abs_vals, _ = moment_grid(f, n_grid, measure, absolute=True)
    return OrderingMoments(
        n_grid=tuple(int(n) for n in n_grid),
        integrals=vals,
        abs_integrals=abs_vals,
        tail_eps=eps,
        monotone=f.monotone_in_n,
    )


def count(sample, f: Ordering, n: int) -> float:
    """N(sample, f_n) = sum over the support of f_n(G) * #Epi(sample, G).

    The sample must cover the support; the sample's own epi_count raises an
    out-of-horizon error on any support object beyond its truncation.
    """
    if f.support_fn is None:
        raise UncertifiedTailError(
            f"ordering {f.family_id!r} has no finite support to count over"
        )
    total = 0.0
    for g in f.support_fn(int(n)):
        v = f.value(int(n), g)
        if v != 0.0:
            total += v * sample.epi_count(g)
    return total


def count_grid(sample, f: Ordering, n_grid) -> np.ndarray:
    """N(sample, f_n) at every n in an ascending grid (vectorized when the
    family provides a hook)."""
    grid = np.asarray(n_grid, dtype=np.int64)
    if f.grid_count_fn is not None:
        return np.asarray(f.grid_count_fn(sample, grid), dtype=np.float64)
    return np.array([count(sample, f, int(n)) for n in grid], dtype=np.float64)


# ---------------------------------------------------------------------------
# characteristic-function predicates (singleton support on subsets)


@dataclass(frozen=True)
class CharPredicate:
    """A decidable predicate on positive integers, with a vectorized mask."""

    name: str
    fn: Callable[[int], bool]
    mask_fn: Optional[Callable[[int], np.ndarray]] = None

    def mask(self, up_to: int) -> np.ndarray:
        """Boolean vector over 1..up_to."""
        if self.mask_fn is not None:
            return np.asarray(self.mask_fn(up_to), dtype=bool)
        return np.fromiter(
            (self.fn(m) for m in range(1, up_to + 1)), dtype=bool, count=up_to
        )


def _primes_mask(up_to: int) -> np.ndarray:
    mask = np.zeros(up_to, dtype=bool)
    ps = primes_up_to(up_to)
    mask[ps - 1] = True
    return mask


def _square_plus_one_mask(up_to: int) -> np.ndarray:
    mask = np.zeros(up_to, dtype=bool)
    x = 1
    while x * x + 1 <= up_to:
        mask[x * x + 1 - 1] = True
        x += 1
    return mask


PREDICATES = {
    "all": CharPredicate("all", lambda m: True, lambda b: np.ones(b, dtype=bool)),
    "even": CharPredicate("even", lambda m: m % 2 == 0,
                          lambda b: (np.arange(1, b + 1) % 2) == 0),
    "primes": CharPredicate("primes", is_prime, _primes_mask),
    "square-plus-one": CharPredicate(
        "square-plus-one",
        lambda m: m >= 2 and round((m - 1) ** 0.5) ** 2 == m - 1,
        _square_plus_one_mask,
    ),
}


def characteristic_ordering(pred: CharPredicate,
                            family_id: Optional[str] = None) -> Ordering:
    """f_n = indicator of singletons {m} with m <= n and pred(m)."""

    def eval_fn(n: int, g) -> float:
        if isinstance(g, FinSet) and len(g) == 1:
            m = tuple(g)[0]
            if m <= n and pred.fn(m):
                return 1.0
        return 0.0

    def support_fn(n: int):
        mask = pred.mask(n) if n >= 1 else np.zeros(0, dtype=bool)
        for m in np.flatnonzero(mask) + 1:
            yield FinSet((int(m),))

    def vector_support_fn(n: int):
        mask = pred.mask(n) if n >= 1 else np.zeros(0, dtype=bool)
        keys = (np.flatnonzero(mask) + 1).astype(np.int64)
        return keys, np.ones(len(keys), dtype=np.float64)

    def grid_count_fn(sample, grid: np.ndarray) -> np.ndarray:
        if not isinstance(sample, SubsetSample):
            raise ScopeError(
                "singleton orderings count subset samples, got "
                f"{type(sample).__name__}"
            )
        top = int(grid[-1])
        if top > sample.horizon:
            raise OutOfHorizonError(
                f"grid reaches n = {top} beyond sample horizon {sample.horizon}"
            )
        hits = pred.mask(top) & sample.membership[:top]
        cs = np.concatenate(([0.0], np.cumsum(hits, dtype=np.float64)))
        return cs[grid]

    def moment_grid_fn(measure: MomentMeasure, grid: np.ndarray):
        if not isinstance(measure, SubsetsMeasure):
            return None
        top = int(grid[-1])
        weighted = np.where(pred.mask(top), measure.singleton_values(top), 0.0)
        cs = np.concatenate(([0.0], np.cumsum(weighted)))
        return cs[grid]

    return Ordering(
        family_id=family_id or f"charfun:{pred.name}",
        instance_tag="subsets",
        eval_fn=eval_fn,
        support_fn=support_fn,
        nonnegative=True,
        monotone_in_n=True,
        vector_support_fn=vector_support_fn,
        grid_count_fn=grid_count_fn,
        moment_grid_fn=moment_grid_fn,
    )


def singleton_ordering() -> Ordering:
    """All singletons {m} with m <= n (the classical point count)."""
    return characteristic_ordering(PREDICATES["all"], family_id="singletons")


# ---------------------------------------------------------------------------
# prime-indexed weights on abelian groups


def _prime_cyclic(p: int) -> AbGroup:
    return AbGroup(((int(p), (1,)),))


def maximal_subgroup_ordering() -> Ordering:
    """f_n(C_p) = 1/(p-1) for primes p <= n, zero elsewhere.

    Against a corank sample this counts maximal sublattices of prime index
    up to n: each C_p-epimorphism target contributes (p^{r_p}-1)/(p-1)
    maximal kernels.
    """

    def eval_fn(n: int, g) -> float:
        if isinstance(g, AbGroup) and g.is_prime_cyclic():
            p = g.local_parts[0][0]
            if p <= n:
                return 1.0 / (p - 1)
        return 0.0

    def support_fn(n: int):
        for p in primes_up_to(n):
            yield _prime_cyclic(int(p))

    def vector_support_fn(n: int):
        keys = primes_up_to(n)
        return keys, 1.0 / (keys.astype(np.float64) - 1.0)

    def grid_count_fn(sample, grid: np.ndarray) -> np.ndarray:
        if not isinstance(sample, CorankSample):
            raise ScopeError(
                "the maximal-subgroup ordering counts corank samples, got "
                f"{type(sample).__name__}"
            )
        top = int(grid[-1])
        if top > sample.prime_bound:
            raise OutOfHorizonError(
                f"grid reaches n = {top} beyond sampled prime bound "
                f"{sample.prime_bound}"
            )
        ps = sample.primes.astype(np.float64)
        weights = (ps ** sample.coranks - 1.0) / (ps - 1.0)
        cs = np.concatenate(([0.0], np.cumsum(weights)))
        idx = np.searchsorted(sample.primes, grid, side="right")
        return cs[idx]

    def moment_grid_fn(measure: MomentMeasure, grid: np.ndarray):
        if measure.name != "ones":
            return None
        ps = primes_up_to(int(grid[-1]))
        cs = np.concatenate(([0.0], np.cumsum(1.0 / (ps.astype(np.float64) - 1.0))))
        idx = np.searchsorted(ps, grid, side="right")
        return cs[idx]

    return Ordering(
        family_id="maximal-subgroups",
        instance_tag="abgroups",
        eval_fn=eval_fn,
        support_fn=support_fn,
        nonnegative=True,
        monotone_in_n=True,
        vector_support_fn=vector_support_fn,
        grid_count_fn=grid_count_fn,
        moment_grid_fn=moment_grid_fn,
    )


# ---------------------------------------------------------------------------
# classical size orderings


def classical_ordering(instance: CategoryInstance, mode: str = "threshold",
                       order_fn: Optional[Callable[[Any], int]] = None) -> Ordering:
    """0/1 ordering by object size: threshold mode is the indicator of
    size <= n; interval mode is the indicator of n < size <= 2n.
    Support enumeration delegates to the instance, so fibers beyond its
    enumeration capacity raise a capacity error."""
    if mode not in ("threshold", "interval"):
        raise ConfigError(f"unknown classical ordering mode {mode!r}")
    size = order_fn or instance.size

    def eval_fn(n: int, g) -> float:
        s = size(g)
        if mode == "threshold":
            return 1.0 if s <= n else 0.0
        return 1.0 if n < s <= 2 * n else 0.0

    def support_fn(n: int):
        bound = n if mode == "threshold" else 2 * n
        for g in instance.objects_up_to(bound):
            if eval_fn(n, g):
                yield g

    return Ordering(
        family_id=f"classical-{mode}",
        instance_tag=instance.tag,
        eval_fn=eval_fn,
        support_fn=support_fn,
        nonnegative=True,
        monotone_in_n=(mode == "threshold"),
    )


# ---------------------------------------------------------------------------
# spec-string parsing


@dataclass(frozen=True)
class ParsedOrdering:
    ordering: Ordering
    default_n: Optional[int] = None


def parse_ordering(spec: str, instance: CategoryInstance) -> ParsedOrdering:
    """Ordering spec strings: "singletons[:<n>]", "charfun:<predicate>",
    "maximal-subgroups", "interval", "threshold"."""
    text = spec.strip()
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    arg = arg.strip()
    if name == "singletons":
        _require_tag(instance, "subsets", text)
        default_n = None
        if arg:
            if not arg.isdigit() or int(arg) < 1:
                raise ConfigError(f"bad singleton index in {text!r}")
            default_n = int(arg)
        return ParsedOrdering(singleton_ordering(), default_n)
    if name == "charfun":
        _require_tag(instance, "subsets", text)
        if arg not in PREDICATES:
            raise ConfigError(
                f"unknown predicate {arg!r}; have {sorted(PREDICATES)}"
            )
        return ParsedOrdering(characteristic_ordering(PREDICATES[arg]))
    if name == "maximal-subgroups":
        _require_tag(instance, "abgroups", text)
        return ParsedOrdering(maximal_subgroup_ordering())
    if name in ("interval", "threshold"):
        return ParsedOrdering(classical_ordering(instance, mode=name))
    raise ConfigError(f"unknown ordering spec {text!r}")


def _require_tag(instance: CategoryInstance, tag: str, spec: str) -> None:
    if instance.tag != tag:
        raise ConfigError(
            f"ordering {spec!r} requires the {tag!r} instance, got {instance.tag!r}"
        )
