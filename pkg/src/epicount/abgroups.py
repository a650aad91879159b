"""Finite abelian groups up to isomorphism.

A group is canonically a map prime -> non-increasing partition of exponents,
e.g. C4 x C2 x C9 <-> {2: (2, 1), 3: (2)}.  Homomorphism counts come from
the classical double-product formula; epimorphism counts from Mobius
inversion over the subgroup lattice of the target (with a closed form for
elementary targets); automorphism orders from the standard abelian p-group
formula.  Random objects are realized through matrix coranks: the p-rank of
the sampled object is the corank of a uniform N x N matrix over F_p, so
#Epi(sample, C_p) = p^corank - 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, total_ordering
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .core import CategoryInstance
from .errors import CapacityError, ConfigError, OutOfHorizonError, ScopeError
from .primes import is_prime

SUBGROUP_ENUM_BOUND = 4096  # largest |G| whose subgroup lattice we enumerate

try:  # jitted batch row reduction; a python fallback is kept alongside
    import numba
except ImportError:  # pragma: no cover
    numba = None


@total_ordering
@dataclass(frozen=True)
class AbGroup:
    """Canonical form of a finite abelian group.

    local_parts is a tuple of (prime, exponents) with primes ascending and
    each exponent partition non-increasing; the trivial group has no parts.
    Handles order by (order, local_parts), a total order on iso classes.
    """

    local_parts: tuple[tuple[int, tuple[int, ...]], ...]
    instance_tag = "abgroups"

    def __init__(self, local_parts: Iterable[tuple[int, Sequence[int]]] = ()):
        parts = []
        for p, exps in local_parts:
            exps = tuple(sorted((int(e) for e in exps), reverse=True))
            if not exps:
                continue
            if not is_prime(int(p)):
                raise ValueError(f"{p} is not prime")
            if exps[-1] < 1:
                raise ValueError(f"exponents must be positive, got {exps}")
            parts.append((int(p), exps))
        parts.sort()
        seen = [p for p, _ in parts]
        if len(set(seen)) != len(seen):
            raise ValueError("duplicate prime in local parts")
        object.__setattr__(self, "local_parts", tuple(parts))

    @property
    def order(self) -> int:
        n = 1
        for p, exps in self.local_parts:
            n *= p ** sum(exps)
        return n

    @property
    def is_trivial(self) -> bool:
        return not self.local_parts

    def p_rank(self, p: int) -> int:
        for q, exps in self.local_parts:
            if q == p:
                return len(exps)
        return 0

    def local_part(self, p: int) -> tuple[int, ...]:
        for q, exps in self.local_parts:
            if q == p:
                return exps
        return ()

    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.local_parts)

    def cyclic_factors(self) -> tuple[int, ...]:
        """Prime-power cyclic factor orders, primes ascending, exponents
        non-increasing within a prime."""
        out = []
        for p, exps in self.local_parts:
            out.extend(p**e for e in exps)
        return tuple(out)

    def is_elementary(self) -> bool:
        return all(set(exps) == {1} for _, exps in self.local_parts)

    def is_prime_cyclic(self) -> bool:
        return len(self.local_parts) == 1 and self.local_parts[0][1] == (1,)

    def sort_key(self):
        return (self.order, self.local_parts)

    def __le__(self, other: "AbGroup"):
        if isinstance(other, AbGroup):
            return self.sort_key() <= other.sort_key()
        return NotImplemented

    def __str__(self) -> str:
        if self.is_trivial:
            return "C1"
        return "x".join(f"C{p**e}" for p, exps in self.local_parts for e in exps)

    def direct_sum(self, other: "AbGroup") -> "AbGroup":
        merged: dict[int, list[int]] = {}
        for grp in (self, other):
            for p, exps in grp.local_parts:
                merged.setdefault(p, []).extend(exps)
        return AbGroup((p, exps) for p, exps in merged.items())

    def invariant_factors(self) -> tuple[int, ...]:
        """Invariant factors d_1, d_2, ... with d_{i+1} | d_i, largest
        first; empty for the trivial group.  Aligns the per-prime
        exponent partitions position by position."""
        width = max((len(exps) for _, exps in self.local_parts), default=0)
        factors = [1] * width
        for p, exps in self.local_parts:
            for i, e in enumerate(exps):
                factors[i] *= p ** e
        return tuple(factors)

    def invariant_factor_name(self) -> str:
        """"C6" style rendering: one cyclic factor per invariant factor."""
        if self.is_trivial:
            return "C1"
        return "x".join(f"C{d}" for d in self.invariant_factors())


def cyclic(m: int) -> AbGroup:
    """C_m for any m >= 1 (split into prime-power factors)."""
    if m < 1:
        raise ValueError(f"cyclic order must be >= 1, got {m}")
    parts: dict[int, list[int]] = {}
    rest = m
    d = 2
    while d * d <= rest:
        if rest % d == 0:
            e = 0
            while rest % d == 0:
                rest //= d
                e += 1
            parts.setdefault(d, []).append(e)
        d += 1
    if rest > 1:
        parts.setdefault(rest, []).append(1)
    return AbGroup(parts.items())


def parse_abgroup(text: str) -> AbGroup:
    """Parse a group literal like "C4xC2xC9" (case-insensitive)."""
    t = text.strip().lower()
    if not t:
        raise ConfigError("empty group literal")
    g = AbGroup()
    for token in t.split("x"):
        token = token.strip()
        if not token.startswith("c") or not token[1:].isdigit():
            raise ConfigError(f"bad cyclic factor {token!r} in {text!r}")
        g = g.direct_sum(cyclic(int(token[1:])))
    return g


@lru_cache(maxsize=None)
def _partitions(k: int) -> tuple[tuple[int, ...], ...]:
    """All non-increasing partitions of k."""
    if k == 0:
        return ((),)
    out = []

    def rec(remaining: int, largest: int, prefix: tuple[int, ...]):
        if remaining == 0:
            out.append(prefix)
            return
        for part in range(min(largest, remaining), 0, -1):
            rec(remaining - part, part, prefix + (part,))

    rec(k, k, ())
    return tuple(out)


def abelian_groups_of_order(n: int) -> list[AbGroup]:
    """All iso classes of order n, sorted by handle."""
    if n < 1:
        raise ValueError(f"order must be positive, got {n}")
    factors: dict[int, int] = {}
    rest, d = n, 2
    while d * d <= rest:
        while rest % d == 0:
            factors[d] = factors.get(d, 0) + 1
            rest //= d
        d += 1
    if rest > 1:
        factors[rest] = factors.get(rest, 0) + 1
    primes = sorted(factors)
    groups = []
    for combo in itertools.product(*(_partitions(factors[p]) for p in primes)):
        groups.append(AbGroup(zip(primes, combo)))
    return sorted(groups)


# ---------------------------------------------------------------------------
# counting formulas


def hom_count(g: AbGroup, h: AbGroup) -> int:
    """|Hom(G, H)| = prod_p prod_{i,j} p^min(e_i, f_j)."""
    total = 1
    for p, exps_g in g.local_parts:
        exps_h = h.local_part(p)
        for e in exps_g:
            for f in exps_h:
                total *= p ** min(e, f)
    return total


def aut_order(g: AbGroup) -> int:
    """|Aut(G)| via the standard formula for abelian p-groups, multiplied
    over the primes of G."""
    total = 1
    for p, exps in g.local_parts:
        total *= _aut_order_p(p, exps)
    return total


def _aut_order_p(p: int, exps: tuple[int, ...]) -> int:
    e = sorted(exps)  # ascending convention
    n = len(e)
    d = [max(l for l in range(n) if e[l] == e[k]) + 1 for k in range(n)]
    c = [min(l for l in range(n) if e[l] == e[k]) + 1 for k in range(n)]
    total = 1
    for k in range(n):
        total *= p ** d[k] - p**k
    for j in range(n):
        total *= (p ** e[j]) ** (n - d[j])
    for i in range(n):
        total *= (p ** (e[i] - 1)) ** (n - c[i] + 1)
    return total


def epi_count_ab(g: AbGroup, h: AbGroup, lattice_method: str = "frattini") -> int:
    """#Epi(G, H) = sum over subgroups K <= H of mu(K, H) |Hom(G, K)|.

    Surjectivity factors through the primary decomposition, so the sum runs
    per prime of H.  Elementary targets use the closed form
    prod_{i<k} (p^r - p^i) with r the p-rank of G.  Otherwise the Mobius
    sum is evaluated either through the classical vanishing theorem
    ("frattini": mu(K, H) = 0 unless K contains pH, and on [pH, H] it is
    (-1)^c p^binom(c,2)) or by the recursive definition over the full
    subgroup lattice ("recursive"); the two agree and are cross-checked in
    the test suite.
    """
    total = 1
    for p, exps_h in h.local_parts:
        exps_g = g.local_part(p)
        k = len(exps_h)
        if set(exps_h) == {1}:  # elementary target: surjections factor mod p
            r = len(exps_g)
            cnt = 1
            for i in range(k):
                cnt *= p**r - p**i
                if cnt == 0:
                    break
            total *= max(cnt, 0)
        elif lattice_method == "frattini":
            total *= _epi_count_p_frattini(p, exps_g, exps_h)
        elif lattice_method == "recursive":
            total *= _epi_count_p_recursive(p, exps_g, exps_h)
        else:
            raise ValueError(f"unknown lattice method {lattice_method!r}")
        if total == 0:
            return 0
    return total


@lru_cache(maxsize=None)
def _epi_count_p_frattini(p: int, exps_g: tuple[int, ...],
                          exps_h: tuple[int, ...]) -> int:
    """Mobius sum over [pH, H]: subgroups K with mu(K, H) != 0 are exactly
    the preimages of subspaces of H/pH."""
    h_factors = tuple(p**e for e in exps_h)
    order_h = 1
    for m in h_factors:
        order_h *= m
    if order_h > SUBGROUP_ENUM_BOUND:
        raise CapacityError(
            f"target p-part of order {order_h} exceeds the lattice bound "
            f"{SUBGROUP_ENUM_BOUND}"
        )
    r = len(exps_h)
    g_handle = AbGroup(((p, exps_g),) if exps_g else ())
    elements = _all_elements(h_factors)
    total = 0
    for basis in _subspaces(p, r):
        dim = len(basis)
        span = _span_fp(p, r, basis)
        k_elems = frozenset(
            x for x in elements if tuple(xi % p for xi in x) in span
        )
        k_type = _iso_type(k_elems, h_factors)
        c = r - dim
        mu = (-1) ** c * p ** (c * (c - 1) // 2)
        total += mu * hom_count(g_handle, k_type)
    return total


@lru_cache(maxsize=None)
def _epi_count_p_recursive(p: int, exps_g: tuple[int, ...],
                           exps_h: tuple[int, ...]) -> int:
    """Same sum with mu computed by the standard recursion over the full
    subgroup lattice of the target."""
    h_factors = tuple(p**e for e in exps_h)
    g_handle = AbGroup(((p, exps_g),) if exps_g else ())
    subs = enumerate_subgroups(h_factors)
    mu = _lattice_mobius_to_top(subs)
    total = 0
    for s, m in zip(subs, mu):
        if m:
            total += m * hom_count(g_handle, _iso_type(s, h_factors))
    return total


def _lattice_mobius_to_top(subs: list[frozenset]) -> list[int]:
    """mu(K, top) for each subgroup, by descending-order recursion:
    mu(top, top) = 1 and sum_{K <= L <= top} mu(L, top) = 0 for K < top."""
    order = sorted(range(len(subs)), key=lambda i: -len(subs[i]))
    mu = [0] * len(subs)
    top = order[0]
    mu[top] = 1
    for idx in order[1:]:
        s = subs[idx]
        acc = 0
        for j in order:
            if len(subs[j]) > len(s) and s <= subs[j]:
                acc += mu[j]
        mu[idx] = -acc
    return mu


@lru_cache(maxsize=None)
def _subspaces(p: int, r: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All subspaces of F_p^r, each given by its reduced row-echelon basis
    (a tuple of row vectors), so each subspace appears exactly once."""
    results: list[tuple[tuple[int, ...], ...]] = []
    for d in range(r + 1):
        for pivots in itertools.combinations(range(r), d):
            pivot_set = set(pivots)
            # free slots: (row i, col c) with c > pivots[i] and c not a pivot
            free = [
                [c for c in range(pivots[i] + 1, r) if c not in pivot_set]
                for i in range(d)
            ]
            flat = [(i, c) for i in range(d) for c in free[i]]
            for fill in itertools.product(range(p), repeat=len(flat)):
                rows = []
                for i in range(d):
                    vec = [0] * r
                    vec[pivots[i]] = 1
                    rows.append(vec)
                for (i, c), val in zip(flat, fill):
                    rows[i][c] = val
                results.append(tuple(tuple(v) for v in rows))
    return tuple(results)


def _span_fp(p: int, r: int, basis: tuple[tuple[int, ...], ...]) -> frozenset:
    span = {tuple([0] * r)}
    for vec in basis:
        new = set()
        for s in span:
            for k in range(1, p):
                new.add(tuple((s[i] + k * vec[i]) % p for i in range(r)))
        span |= new
    return frozenset(span)


# ---------------------------------------------------------------------------
# element-level machinery (subgroup enumeration and typing)


@lru_cache(maxsize=None)
def _all_elements(factors: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.product(*(range(m) for m in factors)))


def _element_order(x: tuple[int, ...], factors: tuple[int, ...]) -> int:
    o = 1
    for xi, m in zip(x, factors):
        o = math.lcm(o, m // math.gcd(m, xi))
    return o


@lru_cache(maxsize=None)
def enumerate_subgroups(factors: tuple[int, ...]) -> list[frozenset]:
    """All subgroups of the group with the given cyclic factor orders, as
    frozensets of element tuples, by closing generator extensions."""
    order = 1
    for m in factors:
        order *= m
    if order > SUBGROUP_ENUM_BOUND:
        raise CapacityError(
            f"subgroup enumeration for |G| = {order} exceeds the bound "
            f"{SUBGROUP_ENUM_BOUND}"
        )
    elements = _all_elements(factors)
    zero = tuple([0] * len(factors))
    trivial = frozenset({zero})
    seen = {trivial}
    frontier = [trivial]
    while frontier:
        s = frontier.pop()
        for g in elements:
            if g in s:
                continue
            t = _extend_subgroup(s, g, factors)
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return sorted(seen, key=lambda fs: (len(fs), sorted(fs)))


def _extend_subgroup(s: frozenset, g: tuple[int, ...],
                     factors: tuple[int, ...]) -> frozenset:
    """The subgroup generated by S and g: S + <g> (the group is abelian)."""
    o = _element_order(g, factors)
    out = set()
    shift = tuple([0] * len(factors))
    for _ in range(o):
        for x in s:
            out.add(tuple((xi + si) % m for xi, si, m in zip(x, shift, factors)))
        shift = tuple((si + gi) % m for si, gi, m in zip(shift, g, factors))
    return frozenset(out)


def _iso_type(elems: frozenset, factors: tuple[int, ...]) -> AbGroup:
    """Iso class of a subgroup given by its elements, recovered from the
    counts of p^k-torsion elements."""
    n = len(elems)
    parts: dict[int, tuple[int, ...]] = {}
    rest, d = n, 2
    prime_list = []
    while d * d <= rest:
        if rest % d == 0:
            prime_list.append(d)
            while rest % d == 0:
                rest //= d
        d += 1
    if rest > 1:
        prime_list.append(rest)
    for p in prime_list:
        lam_conj = []
        prev = 1
        k = 1
        while True:
            a_k = 0
            pk = p**k
            for x in elems:
                ok = True
                for xi, m in zip(x, factors):
                    if (pk * xi) % m != 0:
                        ok = False
                        break
                if ok:
                    a_k += 1
            step = a_k // prev
            if step == 1:
                break
            lam_conj.append(round(math.log(step, p)))
            prev = a_k
            k += 1
        parts[p] = tuple(sorted(_conjugate(lam_conj), reverse=True))
    return AbGroup(parts.items())


def _conjugate(partition: Sequence[int]) -> list[int]:
    """Conjugate partition (rows <-> columns of the Young diagram)."""
    if not partition:
        return []
    width = max(partition)
    return [sum(1 for part in partition if part >= i) for i in range(1, width + 1)]


def subgroups(g: AbGroup, bound: int = SUBGROUP_ENUM_BOUND) -> list[tuple[AbGroup, int]]:
    """Subgroups of G grouped by iso class: (class handle, instance count),
    sorted by handle.  Brute force, capped at |G| <= bound."""
    if g.order > bound:
        raise CapacityError(f"|G| = {g.order} exceeds the subgroup bound {bound}")
    factors = g.cyclic_factors()
    counts: dict[AbGroup, int] = {}
    for s in enumerate_subgroups(factors):
        t = _iso_type(s, factors)
        counts[t] = counts.get(t, 0) + 1
    return sorted(counts.items())


# ---------------------------------------------------------------------------
# matrix corank sampling


def matrix_corank(mat: np.ndarray, p: int) -> int:
    """Corank (n - rank) of a square integer matrix over F_p, by row
    reduction with exact integer arithmetic."""
    a = np.array(mat, dtype=np.int64) % p
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"need a square matrix, got {a.shape}")
    rank = 0
    for col in range(n):
        piv = -1
        for r in range(rank, n):
            if a[r, col]:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
        inv = pow(int(a[rank, col]), p - 2, p)
        a[rank, col:] = (a[rank, col:] * inv) % p
        below = a[rank + 1 :, col:]
        below -= below[:, :1] * a[rank, col:]
        below %= p
        rank += 1
    return n - rank


if numba is not None:

    @numba.njit(cache=True)
    def _batch_corank_kernel(mats, ps):  # pragma: no cover - jitted
        out = np.empty(mats.shape[0], dtype=np.int64)
        n = mats.shape[1]
        for b in range(mats.shape[0]):
            p = ps[b]
            a = mats[b]
            rank = 0
            for col in range(n):
                piv = -1
                for r in range(rank, n):
                    if a[r, col] % p != 0:
                        piv = r
                        break
                if piv < 0:
                    continue
                if piv != rank:
                    for c in range(col, n):
                        tmp = a[piv, c]
                        a[piv, c] = a[rank, c]
                        a[rank, c] = tmp
                lead = a[rank, col] % p
                for r in range(rank + 1, n):
                    f = a[r, col] % p
                    if f != 0:
                        for c in range(col, n):
                            a[r, c] = (lead * a[r, c] - f * a[rank, c]) % p
                rank += 1
            out[b] = n - rank
        return out

else:  # pragma: no cover

    def _batch_corank_kernel(mats, ps):
        return np.array(
            [matrix_corank(mats[i], int(ps[i])) for i in range(len(ps))],
            dtype=np.int64,
        )


def corank_profile(primes: np.ndarray, n_dim: int, rng: np.random.Generator,
                   chunk: int = 8192) -> np.ndarray:
    """Corank of one uniform n_dim x n_dim matrix over F_p for every prime,
    in ascending prime order.  The draw order (prime-major, fixed chunking)
    is part of the determinism contract."""
    ps = np.asarray(primes, dtype=np.int64)
    out = np.empty(len(ps), dtype=np.int64)
    for lo in range(0, len(ps), chunk):
        hi = min(lo + chunk, len(ps))
        mats = rng.integers(
            0, ps[lo:hi, None, None], size=(hi - lo, n_dim, n_dim), dtype=np.int64
        )
        out[lo:hi] = _batch_corank_kernel(mats, ps[lo:hi])
    return out


def sample_corank(p: int, n_dim: int, rng: Union[int, np.random.Generator]) -> int:
    """Corank of a single uniform N x N matrix over F_p."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(rng))))
    mat = rng.integers(0, p, size=(n_dim, n_dim), dtype=np.int64)
    return matrix_corank(mat, p)


@dataclass(frozen=True, eq=False)
class CorankSample:
    """Truncated pro-object sample: one corank per prime up to prime_bound,
    with matrices of dimension matrix_dim.  Evaluates #Epi(sample, C_p) =
    p^corank - 1; other targets are out of scope for this realization."""

    prime_bound: int
    primes: np.ndarray
    coranks: np.ndarray
    matrix_dim: int
    seed_info: str = ""

    def epi_count(self, target: AbGroup) -> int:
        if not target.is_prime_cyclic():
            raise ScopeError(
                f"corank samples evaluate prime-cyclic targets only, got {target}"
            )
        p = target.local_parts[0][0]
        if p > self.prime_bound:
            raise OutOfHorizonError(
                f"target C_{p} exceeds the sampled prime bound {self.prime_bound}"
            )
        i = int(np.searchsorted(self.primes, p))
        if i >= len(self.primes) or self.primes[i] != p:
            raise OutOfHorizonError(f"prime {p} missing from the sampled profile")
        return int(p) ** int(self.coranks[i]) - 1


def sample_corank_profile(prime_bound: int, n_dim: int,
                          rng: Union[int, np.random.Generator],
                          seed_info: str = "") -> CorankSample:
    from .primes import primes_up_to

    if isinstance(rng, (int, np.integer)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(rng))))
    ps = primes_up_to(prime_bound)
    coranks = corank_profile(ps, n_dim, rng)
    return CorankSample(
        prime_bound=prime_bound,
        primes=ps,
        coranks=coranks,
        matrix_dim=n_dim,
        seed_info=seed_info,
    )


# ---------------------------------------------------------------------------
# instance wiring


class AbelianGroupsInstance(CategoryInstance):
    """CategoryInstance over finite abelian groups."""

    tag = "abgroups"

    def epi_count(self, g: AbGroup, h: AbGroup) -> int:
        self.check_handle(g)
        self.check_handle(h)
        return epi_count_ab(g, h)

    def aut_order(self, g: AbGroup) -> int:
        self.check_handle(g)
        return aut_order(g)

    def product(self, g: AbGroup, h: AbGroup) -> AbGroup:
        return g.direct_sum(h)

    def subobjects_surjecting(self, objects) -> list[tuple[AbGroup, int]]:
        """Subgroups of the direct product surjecting onto every factor,
        grouped by iso class (each subgroup instance counted once)."""
        for g in objects:
            self.check_handle(g)
        block_factors = [g.cyclic_factors() for g in objects]
        factors = tuple(m for block in block_factors for m in block)
        order = 1
        for m in factors:
            order *= m
        if order > SUBGROUP_ENUM_BOUND:
            raise CapacityError(
                f"product of order {order} exceeds the enumeration bound "
                f"{SUBGROUP_ENUM_BOUND}"
            )
        # block slices inside the concatenated coordinate tuple
        slices = []
        at = 0
        for block in block_factors:
            slices.append((at, at + len(block)))
            at += len(block)
        sizes = [g.order for g in objects]
        counts: dict[AbGroup, int] = {}
        for s in enumerate_subgroups(factors):
            ok = True
            for (lo, hi), want in zip(slices, sizes):
                if len({x[lo:hi] for x in s}) != want:
                    ok = False
                    break
            if ok:
                t = _iso_type(s, factors)
                counts[t] = counts.get(t, 0) + 1
        return sorted(counts.items())

    def objects_up_to(self, size_bound: int) -> Iterator[AbGroup]:
        for n in range(1, size_bound + 1):
            yield from abelian_groups_of_order(n)

    def size(self, g: AbGroup) -> int:
        return g.order

    def coprime(self, g: AbGroup, h: AbGroup) -> bool:
        return math.gcd(g.order, h.order) == 1
