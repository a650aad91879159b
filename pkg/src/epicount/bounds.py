"""Moment-bound integrals over tuple spaces.

Second moments integrate |f x f| over ordered pairs outside the
uncorrelated set (pairs whose epi-product exists with multiplicative
measure); the pair set is decided per pair.  A pair whose epi-product is
not found within the search bound is kept in the integral, so an
undersized bound can only enlarge the result, never invalidate it.  Higher even moments
(order 2k) integrate over 2k-tuples with at most k distinct coordinates,
which is the superset of the correlated tuples available when either

  * the instance is subsets and the support is pairwise disjoint, or
  * the instance is abgroups and the support consists of prime-cyclic
    groups with pairwise distinct primes under a coprime-multiplicative
    measure.

In both cases the j-fold mixed measure of a tuple factorizes over its
distinct coordinates, so every integral reduces to sums of products of
one-dimensional prefix sums: tuples are grouped by their coordinate
equality pattern (a set partition of the positions) and the requirement
that distinct blocks carry distinct values is unwound by
inclusion-exclusion over block merges.  Anything outside the two
reductions raises a scope error naming what failed.

The growth-rate denominator (n^{(1+eps)/k} times the max over j of the
full k-tuple integrals, no exclusion) reuses the same engine with the
distinct-coordinate cap removed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .abgroups import AbGroup
from .core import CategoryInstance, MomentMeasure, in_e2, mixed_moment
from .errors import CapacityError, ScopeError
from .orderings import Ordering
from .subsets import FinSet, SubsetsMeasure

MAX_TUPLE_POSITIONS = 8   # set partitions of more positions get too large
MAX_PAIR_SUPPORT = 128    # exact pair enumeration cap for the 2nd-moment bound


# ---------------------------------------------------------------------------
# subspace counting over F_p (vectorized over the prime)


def gaussian_binomial(m: int, d: int, p: np.ndarray) -> np.ndarray:
    """Number of d-dimensional subspaces of F_p^m, per prime in p."""
    p = np.asarray(p, dtype=np.float64)
    if d < 0 or d > m:
        return np.zeros(p.shape)
    out = np.ones(p.shape)
    for i in range(d):
        out *= (p ** (m - i) - 1.0) / (p ** (i + 1) - 1.0)
    return out


def surjective_subspace_count(t: int, d: int, p: np.ndarray) -> np.ndarray:
    """Number of d-dimensional subspaces of F_p^t projecting onto every
    coordinate, by inclusion-exclusion over coordinates forced to zero."""
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros(p.shape)
    for s in range(t + 1):
        out += ((-1) ** s) * math.comb(t, s) * gaussian_binomial(t - s, d, p)
    return out


def diagonal_mixed_ones(t: int, p: np.ndarray) -> np.ndarray:
    """t-fold diagonal mixed moment of C_p under M = 1: the number of
    subobject classes of C_p^t surjecting onto every coordinate."""
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros(p.shape)
    for d in range(t + 1):
        out += surjective_subspace_count(t, d, p)
    return out


def _elementary(p: int, d: int) -> AbGroup:
    return AbGroup(((int(p), (1,) * d),))


# ---------------------------------------------------------------------------
# the pattern engine


@lru_cache(maxsize=None)
def set_partitions(m: int, max_blocks: int) -> tuple:
    """All partitions of {0..m-1} into at most max_blocks blocks, each block
    sorted, blocks ordered by least element."""
    results: list = []
    blocks: list[list[int]] = []

    def rec(i: int) -> None:
        if i == m:
            results.append(tuple(tuple(b) for b in blocks))
            return
        for b in blocks:
            b.append(i)
            rec(i + 1)
            b.pop()
        if len(blocks) < max_blocks:
            blocks.append([i])
            rec(i + 1)
            blocks.pop()

    rec(0)
    return tuple(results)


def _merge_mu(size: int) -> float:
    # Moebius coefficient of collapsing `size` blocks onto one value
    return float((-1) ** (size - 1) * math.factorial(size - 1))


@dataclass
class _SupportArrays:
    """Vector view of a keyed support: phi = |f| per key, m_vals = M per
    key, mixed_diag(t) = t-fold diagonal mixed moment per key.  keys are
    ascending; prefix sums searchsorted against an n-grid evaluate every
    checkpoint at once."""

    keys: np.ndarray
    phi: np.ndarray
    m_vals: np.ndarray
    mixed_diag: Callable[[int], np.ndarray]


def _prefix_at(weights: np.ndarray, keys: np.ndarray, grid: np.ndarray) -> np.ndarray:
    cs = np.concatenate(([0.0], np.cumsum(weights)))
    return cs[np.searchsorted(keys, grid, side="right")]


def _pattern_sum(sa: _SupportArrays, positions: int, j: int, max_blocks: int,
                 grid: np.ndarray, cache: Optional[dict] = None) -> np.ndarray:
    """Sum over `positions`-tuples of support values with at most max_blocks
    distinct coordinates of  prod_i phi(a_i) * [factorized M^(j) over the
    first j coordinates] * prod_{i>j} M(a_i),  per grid entry.

    Tuples are grouped by the set partition induced by coordinate equality;
    the distinct-values constraint across blocks is expanded by
    inclusion-exclusion over partitions of the blocks, which is an identity
    in the per-block value functions and needs no further measure theory.
    """
    if positions > MAX_TUPLE_POSITIONS:
        raise CapacityError(
            f"tuple integrals over {positions} positions exceed the "
            f"supported maximum {MAX_TUPLE_POSITIONS}"
        )
    if cache is None:
        cache = {}
    total = np.zeros(len(grid))
    for blocks in set_partitions(positions, max_blocks):
        # per block: t' coordinates under the mixed measure, s under the product
        stats = [(len(b), sum(1 for i in b if i < j)) for b in blocks]
        for merge in set_partitions(len(blocks), len(blocks)):
            coef = 1.0
            term = np.ones(len(grid))
            for cls in merge:
                coef *= _merge_mu(len(cls))
                phi_exp = sum(stats[t][0] for t in cls)
                tps = tuple(sorted(stats[t][1] for t in cls if stats[t][1] > 0))
                s_sum = sum(stats[t][0] - stats[t][1] for t in cls)
                key = (phi_exp, tps, s_sum)
                pref = cache.get(key)
                if pref is None:
                    w = sa.phi ** phi_exp
                    for t in tps:
                        w = w * sa.mixed_diag(t)
                    if s_sum:
                        w = w * sa.m_vals ** s_sum
                    pref = _prefix_at(w, sa.keys, grid)
                    cache[key] = pref
                term = term * pref
            total += coef * term
    return total


# ---------------------------------------------------------------------------
# support-array builders (the two reductions)


def _subsets_mixed(m_vals: np.ndarray) -> Callable[[int], np.ndarray]:
    # the union of t copies of A is A, so every diagonal mixed moment is M_A
    return lambda t: m_vals


def _abgroups_mixed(ps: np.ndarray, measure: MomentMeasure) -> Callable[[int], np.ndarray]:
    if measure.name == "ones":
        return lambda t: diagonal_mixed_ones(t, ps)

    def mixed(t: int) -> np.ndarray:
        out = np.zeros(len(ps))
        for d in range(t + 1):
            cnt = surjective_subspace_count(t, d, ps)
            if d == 0:
                continue  # zero count for t >= 1
            vals = np.array(
                [measure.value(_elementary(int(p), d)) for p in ps]
            )
            out += cnt * vals
        return out

    return mixed


def _vector_arrays(f: Ordering, measure: MomentMeasure,
                   instance: CategoryInstance, up_to: int) -> Optional[_SupportArrays]:
    """Grid-capable arrays when the family exposes integer-keyed support
    (support at n = keys <= n) and the measure vectorizes; None otherwise."""
    if f.vector_support_fn is None:
        return None
    if instance.tag == "subsets":
        if not isinstance(measure, SubsetsMeasure):
            return None
        keys, phi = f.vector_support_fn(up_to)
        m_vals = measure.singleton_values(up_to)[keys - 1] if len(keys) else np.zeros(0)
        return _SupportArrays(keys, phi, m_vals, _subsets_mixed(m_vals))
    if instance.tag == "abgroups":
        if not measure.coprime_multiplicative:
            return None
        keys, phi = f.vector_support_fn(up_to)
        if measure.name == "ones":
            m_vals = np.ones(len(keys))
        else:
            m_vals = np.array([measure.value(_elementary(int(p), 1)) for p in keys])
        return _SupportArrays(keys, phi, m_vals, _abgroups_mixed(keys, measure))
    return None


def _generic_arrays(f: Ordering, n: int, measure: MomentMeasure,
                    instance: CategoryInstance) -> _SupportArrays:
    """Single-n arrays from explicit support enumeration, validating the
    reduction hypotheses; keys are synthetic ranks."""
    if f.support_fn is None:
        raise ScopeError(
            f"ordering {f.family_id!r} has no enumerable support for tuple bounds"
        )
    supp = [(g, abs(f.value(n, g))) for g in f.support_fn(n)]
    supp = [(g, v) for g, v in supp if v != 0.0]
    if instance.tag == "subsets":
        seen: set[int] = set()
        for g, _ in supp:
            elems = set(g)
            if seen & elems:
                raise ScopeError(
                    "higher-moment reduction on subsets requires pairwise "
                    f"disjoint support; {g} overlaps earlier support"
                )
            seen |= elems
        phi = np.array([v for _, v in supp])
        m_vals = np.array([measure.value(g) for g, _ in supp])
        keys = np.arange(1, len(supp) + 1, dtype=np.int64)
        return _SupportArrays(keys, phi, m_vals, _subsets_mixed(m_vals))
    if instance.tag == "abgroups":
        if not measure.coprime_multiplicative:
            raise ScopeError(
                "higher-moment reduction on abgroups requires a "
                f"coprime-multiplicative measure; {measure.name!r} is not declared one"
            )
        primes_seen: set[int] = set()
        for g, _ in supp:
            if not (isinstance(g, AbGroup) and g.is_prime_cyclic()):
                raise ScopeError(
                    "higher-moment reduction on abgroups requires prime-cyclic "
                    f"support; got {g}"
                )
            p = g.local_parts[0][0]
            if p in primes_seen:
                raise ScopeError(
                    f"higher-moment reduction requires pairwise-coprime support; "
                    f"prime {p} repeats"
                )
            primes_seen.add(p)
        ps = np.array([g.local_parts[0][0] for g, _ in supp], dtype=np.int64)
        phi = np.array([v for _, v in supp])
        if measure.name == "ones":
            m_vals = np.ones(len(supp))
        else:
            m_vals = np.array([measure.value(g) for g, _ in supp])
        keys = np.arange(1, len(supp) + 1, dtype=np.int64)
        return _SupportArrays(keys, phi, m_vals, _abgroups_mixed(ps, measure))
    raise ScopeError(
        f"no higher-moment reduction is implemented for instance {instance.tag!r}"
    )


# ---------------------------------------------------------------------------
# second-moment bound, exact uncorrelated-pair complement


def theoretical_bound_2(f: Ordering, n: int, measure: MomentMeasure,
                        instance: CategoryInstance, search_bound: int = 100) -> float:
    return float(
        theoretical_bound_2_grid(f, [int(n)], measure, instance, search_bound)[0]
    )


def theoretical_bound_2_grid(f: Ordering, n_grid, measure: MomentMeasure,
                             instance: CategoryInstance,
                             search_bound: int = 100) -> np.ndarray:
    """max over j in {1,2} of the |f x f| integral over correlated support
    pairs, at each grid entry.

    Keyed families reduce to the diagonal: on subsets a pair (A,A) is
    correlated exactly when 0 < M_A < 1 (the union always exists, so only
    measure multiplicativity can fail), and distinct disjoint supports are
    uncorrelated; on abgroups (C_p, C_p) never has an epi-product while
    distinct primes always do with multiplicative measure.
    """
    grid = np.asarray(n_grid, dtype=np.int64)
    sa = _vector_arrays(f, measure, instance, int(grid[-1]))
    if sa is not None:
        if instance.tag == "subsets":
            mask = (sa.m_vals > 0.0) & (sa.m_vals < 1.0)
        else:
            mask = np.ones(len(sa.keys), dtype=bool)
        j2 = _prefix_at(sa.phi ** 2 * sa.mixed_diag(2) * mask, sa.keys, grid)
        j1 = _prefix_at(sa.phi ** 2 * sa.m_vals ** 2 * mask, sa.keys, grid)
        return np.maximum(j2, j1)
    return np.array(
        [_bound2_pairs(f, int(n), measure, instance, search_bound) for n in grid]
    )


def _bound2_pairs(f: Ordering, n: int, measure: MomentMeasure,
                  instance: CategoryInstance, search_bound: int) -> float:
    if f.support_fn is None:
        raise ScopeError(
            f"ordering {f.family_id!r} has no enumerable support for pair bounds"
        )
    supp = [(g, f.value(n, g)) for g in f.support_fn(n)]
    supp = [(g, v) for g, v in supp if v != 0.0]
    if len(supp) > MAX_PAIR_SUPPORT:
        raise CapacityError(
            f"exact pair enumeration over {len(supp)} support objects exceeds "
            f"the cap {MAX_PAIR_SUPPORT}"
        )
    e2_cache: dict = {}
    mixed_cache: dict = {}
    j1 = 0.0
    j2 = 0.0
    for a, (g, vg) in enumerate(supp):
        for h, vh in supp[a:]:
            key = (g, h)
            try:
                correlated = e2_cache.get(key)
                if correlated is None:
                    correlated = not in_e2(instance, measure, g, h,
                                           search_bound=search_bound)
                    e2_cache[key] = correlated
                if not correlated:
                    continue
                m2 = mixed_cache.get(key)
                if m2 is None:
                    m2 = mixed_moment(instance, measure, [g, h])
                    mixed_cache[key] = m2
            except CapacityError as exc:
                raise CapacityError(f"pair ({g}, {h}): {exc}") from exc
            # ordered pairs: off-diagonal combinations occur twice
            mult = 1.0 if h == g else 2.0
            w = abs(vg * vh) * mult
            j2 += w * m2
            j1 += w * measure.value(g) * measure.value(h)
    return max(j1, j2)


# ---------------------------------------------------------------------------
# 2k-th moment bound over tuples with at most k distinct coordinates


def theoretical_bound_2k(f: Ordering, n: int, measure: MomentMeasure,
                         instance: CategoryInstance, k: int) -> float:
    return float(theoretical_bound_2k_grid(f, [int(n)], measure, instance, k)[0])


def theoretical_bound_2k_grid(f: Ordering, n_grid, measure: MomentMeasure,
                              instance: CategoryInstance, k: int) -> np.ndarray:
    """max over j in {1..2k} of the |f x ... x f| integral over 2k-tuples
    with at most k distinct coordinates (the correlated superset under the
    two supported reductions), at each grid entry.  k is half the moment
    order: this bounds the 2k-th central moment up to a constant."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    grid = np.asarray(n_grid, dtype=np.int64)
    sa = _vector_arrays(f, measure, instance, int(grid[-1]))
    if sa is not None:
        return _bound_2k_from_arrays(sa, k, grid)
    out = np.empty(len(grid))
    for i, n in enumerate(grid):
        sa_n = _generic_arrays(f, int(n), measure, instance)
        full = np.array([sa_n.keys[-1]]) if len(sa_n.keys) else np.array([0])
        out[i] = _bound_2k_from_arrays(sa_n, k, full)[0]
    return out


def _bound_2k_from_arrays(sa: _SupportArrays, k: int, grid: np.ndarray) -> np.ndarray:
    cache: dict = {}
    best = np.full(len(grid), -np.inf)
    for j in range(1, 2 * k + 1):
        best = np.maximum(best, _pattern_sum(sa, 2 * k, j, k, grid, cache))
    return best


# ---------------------------------------------------------------------------
# growth-rate denominator (full k-tuple integrals, no exclusion)


def corollary_denominator(f: Ordering, n: int, measure: MomentMeasure,
                          instance: CategoryInstance, k: int, eps: float) -> float:
    return float(
        corollary_denominator_grid(f, [int(n)], measure, instance, k, eps)[0]
    )


def corollary_denominator_grid(f: Ordering, n_grid, measure: MomentMeasure,
                               instance: CategoryInstance, k: int,
                               eps: float) -> np.ndarray:
    """n^{(1+eps)/k} * max_{j in 1..k} I_j^{1/k} where I_j integrates
    |f x ... x f| over all of C^k with the j-fold mixed measure on the
    first j coordinates and the product measure on the rest.  The product
    zone carries no joint constraint, so I_j factorizes as the mixed-zone
    j-tuple sum times (int |f| dM)^{k-j}."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if eps <= 0:
        raise ValueError("eps must be positive")
    grid = np.asarray(n_grid, dtype=np.int64)
    sa = _vector_arrays(f, measure, instance, int(grid[-1]))
    if sa is not None:
        return _corollary_from_arrays(sa, k, eps, grid, grid)
    out = np.empty(len(grid))
    for i, n in enumerate(grid):
        sa_n = _generic_arrays(f, int(n), measure, instance)
        full = np.array([sa_n.keys[-1]]) if len(sa_n.keys) else np.array([0])
        out[i] = _corollary_from_arrays(sa_n, k, eps, full, np.array([int(n)]))[0]
    return out


def _corollary_from_arrays(sa: _SupportArrays, k: int, eps: float,
                           grid: np.ndarray, n_values: np.ndarray) -> np.ndarray:
    cache: dict = {}
    abs_first = _prefix_at(sa.phi * sa.m_vals, sa.keys, grid)
    best = np.full(len(grid), -np.inf)
    for j in range(1, k + 1):
        mixed_part = _pattern_sum(sa, j, j, j, grid, cache)
        best = np.maximum(best, mixed_part * abs_first ** (k - j))
    return n_values.astype(np.float64) ** ((1.0 + eps) / k) * best ** (1.0 / k)
