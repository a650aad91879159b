"""The category of finite subsets of the positive integers.

Morphisms are reversed inclusions, so there is exactly one epimorphism
B -> A when A is a subset of B and none otherwise; every automorphism group
is trivial; the categorical product is the union.  A random object is an
infinite random subset sampled membership-by-membership and truncated to a
finite horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from .core import CategoryInstance, LevelPoset, MomentMeasure
from .errors import CapacityError, ConfigError, OutOfHorizonError

MAX_ENUMERATION_GROUND = 16  # objects_up_to / level enumerate 2^n subsets


@total_ordering
@dataclass(frozen=True)
class FinSet:
    """A finite set of positive integers in canonical (sorted, deduplicated)
    form.

    Comparison operators give the total order on handles (lexicographic on
    the element tuple); containment questions go through subset_of.
    """

    elements: tuple[int, ...]
    instance_tag = "subsets"

    def __init__(self, elements: Iterable[int] = ()):
        elems = sorted(set(int(e) for e in elements))
        if elems and elems[0] < 1:
            raise ValueError(f"subset elements must be positive, got {elems[0]}")
        object.__setattr__(self, "elements", tuple(elems))

    def __iter__(self):
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, x: int) -> bool:
        return x in self.elements

    def __le__(self, other: "FinSet"):
        if isinstance(other, FinSet):
            return self.elements <= other.elements
        return NotImplemented

    def __str__(self) -> str:
        return "{" + ",".join(str(e) for e in self.elements) + "}"

    @property
    def max_element(self) -> int:
        return self.elements[-1] if self.elements else 0

    def subset_of(self, other: "FinSet") -> bool:
        return set(self.elements) <= set(other.elements)

    def union(self, other: "FinSet") -> "FinSet":
        return FinSet(self.elements + other.elements)


def parse_finset(text: str) -> FinSet:
    """Parse "{1,2,5}", "1,2,5" or "empty" into a FinSet."""
    t = text.strip().lstrip("{").rstrip("}").strip()
    if t in ("", "empty"):
        return FinSet(())
    try:
        return FinSet(int(part) for part in t.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse subset literal {text!r}: {exc}") from None


@dataclass(frozen=True)
class RSequence:
    """A rule n -> r_n in [0, 1] assigning the inclusion probability of each
    positive integer, identified by a preset key for reproducibility.

    vector_fn, when present, evaluates a whole numpy index array at once;
    values() caches the longest horizon seen so repeated sampling does not
    re-evaluate the rule.
    """

    key: str
    fn: object  # Callable[[int], float]
    vector_fn: Optional[object] = None  # Callable[[np.ndarray], np.ndarray]

    def value(self, n: int) -> float:
        if n < 1:
            raise ValueError(f"r-sequence index must be positive, got {n}")
        v = float(self.fn(n))
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"r-sequence {self.key!r} gave r_{n} = {v!r} outside [0, 1]")
        return v

    def values(self, horizon: int) -> np.ndarray:
        """r_1..r_horizon as a read-only float array (index j-1 holds r_j)."""
        cache = self.__dict__.get("_values_cache")
        if cache is None or len(cache) < horizon:
            idx = np.arange(1, horizon + 1, dtype=np.int64)
            if self.vector_fn is not None:
                arr = np.asarray(self.vector_fn(idx), dtype=np.float64)
            else:
                arr = np.array([self.fn(int(j)) for j in idx], dtype=np.float64)
            if arr.shape != (horizon,):
                raise ValueError(f"r-sequence {self.key!r} returned bad shape {arr.shape}")
            if np.any((arr < 0.0) | (arr > 1.0)):
                bad = int(idx[np.argmax((arr < 0.0) | (arr > 1.0))])
                raise ValueError(f"r-sequence {self.key!r} leaves [0, 1] at n = {bad}")
            arr.flags.writeable = False
            object.__setattr__(self, "_values_cache", arr)
            cache = arr
        return cache[:horizon]


def constant_preset(p: float) -> RSequence:
    if not (0.0 <= p <= 1.0):
        raise ConfigError(f"constant preset needs p in [0, 1], got {p}")
    return RSequence(
        key=f"constant:{p:g}",
        fn=lambda n: p,
        vector_fn=lambda idx: np.full(len(idx), p, dtype=np.float64),
    )


def cramer_preset() -> RSequence:
    """r_1 = 0, r_2 = 1, r_n = 1/log n: the random-primes model."""

    def fn(n: int) -> float:
        if n == 1:
            return 0.0
        if n == 2:
            return 1.0
        return 1.0 / math.log(n)

    def vector_fn(idx: np.ndarray) -> np.ndarray:
        out = np.zeros(len(idx), dtype=np.float64)
        big = idx >= 3
        out[big] = 1.0 / np.log(idx[big].astype(np.float64))
        out[idx == 2] = 1.0
        return out

    return RSequence(key="cramer", fn=fn, vector_fn=vector_fn)


def table_preset(path: str) -> RSequence:
    """One probability per line, 1-indexed; indices beyond the file error."""
    values: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: not a probability: {line!r}") from None
    table = np.array(values, dtype=np.float64)

    def fn(n: int) -> float:
        if n > len(table):
            raise OutOfHorizonError(
                f"r-table {path!r} has {len(table)} entries, asked for r_{n}"
            )
        return float(table[n - 1])

    def vector_fn(idx: np.ndarray) -> np.ndarray:
        if len(idx) and int(idx[-1]) > len(table):
            raise OutOfHorizonError(
                f"r-table {path!r} has {len(table)} entries, asked for r_{int(idx[-1])}"
            )
        return table[idx - 1]

    return RSequence(key=f"table:{path}", fn=fn, vector_fn=vector_fn)


def parse_r_preset(key: str) -> RSequence:
    """Resolve a preset key: "constant:<p>", "cramer", or "table:<path>"."""
    if key == "cramer":
        return cramer_preset()
    if key.startswith("constant:"):
        try:
            p = float(key.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad constant preset {key!r}") from None
        return constant_preset(p)
    if key.startswith("table:"):
        return table_preset(key.split(":", 1)[1])
    raise ConfigError(f"unknown r-sequence preset {key!r}")


@dataclass(frozen=True)
class SubsetsMeasure(MomentMeasure):
    """Subsets moment measure with its defining r-sequence attached, so
    array-based fast paths can evaluate whole index ranges at once."""

    r_sequence: RSequence = None

    def singleton_values(self, up_to: int) -> np.ndarray:
        """M_{j} = r_j for j = 1..up_to, as a read-only vector."""
        return self.r_sequence.values(up_to)


def subsets_measure(r: RSequence) -> SubsetsMeasure:
    """M_A = prod_{a in A} r_a (empty product 1).  Multiplicative on
    disjoint pairs by construction."""
    return SubsetsMeasure(
        name=f"subsets[{r.key}]",
        value_fn=lambda a: subset_moment(a, r),
        coprime_multiplicative=True,
        r_sequence=r,
    )


def subset_moment(a: FinSet, r: RSequence) -> float:
    value = 1.0
    for x in a:
        value *= r.value(x)
    return value


@dataclass(frozen=True, eq=False)
class SubsetSample:
    """A random subset truncated to {1..horizon}: membership[j-1] says
    whether j was included.  seed_info documents how the stream was built."""

    horizon: int
    membership: np.ndarray
    seed_info: str = ""

    def epi_count(self, a: FinSet) -> int:
        """#Epi(sample, A): 1 if A is contained in the sample else 0.
        Raises instead of silently answering beyond the horizon."""
        if a.max_element > self.horizon:
            raise OutOfHorizonError(
                f"target {a} exceeds sample horizon {self.horizon}"
            )
        for x in a:
            if not self.membership[x - 1]:
                return 0
        return 1

    def prefix_counts(self, weights: np.ndarray) -> np.ndarray:
        """Cumulative sums of weights over included integers; entry j-1 holds
        the weighted count of the sample intersected with {1..j}."""
        w = np.where(self.membership, weights[: self.horizon], 0.0)
        return np.cumsum(w)


def sample_subset(r: RSequence, horizon: int,
                  rng: Union[int, np.random.Generator],
                  seed_info: str = "") -> SubsetSample:
    """Draw each j <= horizon independently with probability r_j.

    Deterministic given (seed, horizon, preset key): an integer seed is
    expanded via numpy's SeedSequence/PCG64 and exactly horizon uniforms are
    consumed in index order.
    """
    if isinstance(rng, (int, np.integer)):
        seed_info = seed_info or f"seed={int(rng)}"
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(rng))))
    u = rng.random(horizon)
    membership = u < r.values(horizon)
    membership.flags.writeable = False
    return SubsetSample(horizon=horizon, membership=membership, seed_info=seed_info)


def epi_count_subsets(b: Union[FinSet, SubsetSample], a: FinSet) -> int:
    """#Epi(B, A) = 1 iff A is a subset of B.  Samples are checked against
    their horizon first; out-of-horizon queries raise, never return 0."""
    if isinstance(b, SubsetSample):
        return b.epi_count(a)
    return 1 if a.subset_of(b) else 0


def _mask_leq_matrix(masks: np.ndarray) -> np.ndarray:
    """Subset relation on bitmask-encoded sets: row i <= col j iff
    masks[i] & ~masks[j] == 0."""
    return (masks[:, None] & ~masks[None, :]) == 0


class SubsetsInstance(CategoryInstance):
    """CategoryInstance wiring for finite subsets."""

    tag = "subsets"

    def epi_count(self, g: FinSet, h: FinSet) -> int:
        self.check_handle(g)
        self.check_handle(h)
        return 1 if h.subset_of(g) else 0

    def aut_order(self, g: FinSet) -> int:
        self.check_handle(g)
        return 1

    def product(self, g: FinSet, h: FinSet) -> FinSet:
        return g.union(h)

    def epi_product_closed_form(self, g: FinSet, h: FinSet) -> FinSet:
        # the union is the epi-product: inclusion indicators multiply
        return g.union(h)

    def subobjects_surjecting(self, objects) -> list[tuple[FinSet, int]]:
        # Every morphism here is epi, so any map G -> U equals its own image
        # and the image-partition of Hom(G, U) has the single block H = U;
        # mixed moments therefore collapse to M of the union.
        u = FinSet(())
        for a in objects:
            self.check_handle(a)
            u = u.union(a)
        return [(u, 1)]

    def objects_up_to(self, size_bound: int) -> Iterator[FinSet]:
        """All subsets of {1..size_bound} (size = largest element)."""
        if size_bound > MAX_ENUMERATION_GROUND:
            raise CapacityError(
                f"enumerating subsets of {{1..{size_bound}}} exceeds the "
                f"ground cap {MAX_ENUMERATION_GROUND}"
            )
        ground = list(range(1, size_bound + 1))
        all_sets = []
        for mask in range(1 << len(ground)):
            all_sets.append(FinSet(g for i, g in enumerate(ground) if mask >> i & 1))
        return iter(sorted(all_sets))

    def size(self, g: FinSet) -> int:
        return g.max_element

    def coprime(self, g: FinSet, h: FinSet) -> bool:
        return not (set(g.elements) & set(h.elements))

    def level(self, level_spec: FinSet) -> LevelPoset:
        """The level poset of all subsets of D, ordered by inclusion."""
        self.check_handle(level_spec)
        d = list(level_spec.elements)
        if len(d) > 12:
            raise CapacityError(f"level on |D| = {len(d)} > 12 not supported")
        members = []
        masks = np.arange(1 << len(d), dtype=np.uint32)
        for mask in masks:
            members.append(FinSet(x for i, x in enumerate(d) if int(mask) >> i & 1))
        return LevelPoset(members, leq_matrix=_mask_leq_matrix(masks))


def sample_epi_count(sample: SubsetSample, g: FinSet) -> int:
    return sample.epi_count(g)
