"""Category-level machinery: object handles, moment measures, level posets,
Mobius inversion, mixed moments, and bounded epi-product search.

Conventions used throughout:

* An *object handle* is a canonical, hashable, totally ordered token for an
  isomorphism class.  Two handles compare equal exactly when the objects are
  isomorphic, and every deterministic accumulation below iterates handles in
  their sorted order.
* ``epi_count(G, H)`` counts epimorphisms G -> H between the classes.
* A *level poset* orders a finite set of objects by B <= A iff an
  epimorphism A -> B exists.  Only this orientation is used.
* Floating point is 64-bit; equality of measure values is always a relative
  comparison against ``REL_TOL``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import (
    CapacityError,
    PosetDomainError,
    ScopeError,
    UnsupportedInstanceError,
)

REL_TOL = 1e-12

# Hard cap on level-poset size; 2^12 covers everything the verification
# suite exercises and keeps the Mobius table in memory.
MAX_POSET_ELEMENTS = 4096


def close_rel(x: float, y: float, rel_tol: float = REL_TOL) -> bool:
    """Relative equality with an absolute fallback near zero."""
    scale = max(abs(x), abs(y))
    return abs(x - y) <= rel_tol * max(scale, 1.0)


class CategoryInstance(ABC):
    """Interface a concrete category must provide.

    Handles passed in must carry ``instance_tag`` matching ``self.tag``;
    epi/aut counts are exact nonnegative integers and iso-invariant, with
    epi_count(G, G) == aut_order(G).
    """

    tag: str = ""

    @abstractmethod
    def epi_count(self, g, h) -> int:
        """Number of epimorphisms G -> H."""

    @abstractmethod
    def aut_order(self, g) -> int:
        """Order of the automorphism group of G."""

    @abstractmethod
    def product(self, g, h):
        """Categorical product G x H, or None if it does not exist."""

    @abstractmethod
    def subobjects_surjecting(self, objects: Sequence) -> list[tuple[object, int]]:
        """Subobjects H of prod(objects) whose composition with every
        projection is an epimorphism, as (iso handle, multiplicity) pairs."""

    @abstractmethod
    def objects_up_to(self, size_bound: int) -> Iterator:
        """All iso classes of size <= size_bound in canonical handle order."""

    @abstractmethod
    def size(self, g) -> int:
        """The size used by objects_up_to and search bounds."""

    @abstractmethod
    def coprime(self, g, h) -> bool:
        """Whether (G, H) is a coprime pair in this instance's sense."""

    def level(self, level_spec) -> "LevelPoset":
        raise UnsupportedInstanceError(
            f"instance {self.tag!r} does not define level posets"
        )

    def check_handle(self, g) -> None:
        tag = getattr(g, "instance_tag", None)
        if tag != self.tag:
            raise ScopeError(
                f"handle {g!r} (tag {tag!r}) does not belong to instance {self.tag!r}"
            )


@dataclass(frozen=True)
class MomentMeasure:
    """Expected epi-counts G -> E[#Epi(sample, G)].

    ``value`` must be nonnegative and finite on every handle it is asked
    about.  ``coprime_multiplicative`` declares M_{GxH} = M_G * M_H for
    coprime pairs; bound reductions rely on it.
    """

    name: str
    value_fn: Callable[[object], float]
    coprime_multiplicative: bool = False

    def value(self, g) -> float:
        v = float(self.value_fn(g))
        if not np.isfinite(v) or v < 0.0:
            raise ValueError(f"moment measure {self.name!r} returned {v!r} at {g!r}")
        return v

    def __call__(self, g) -> float:
        return self.value(g)


def ones_measure(name: str = "ones") -> MomentMeasure:
    """The measure with M == 1 on every object (abelian groups experiment)."""
    return MomentMeasure(name=name, value_fn=lambda g: 1.0, coprime_multiplicative=True)


class LevelPoset:
    """A finite poset of object handles, ordered by B <= A iff an epi A -> B
    exists, with the Mobius function computed by the standard recursion

        mu(B, B) = 1,      sum_{B <= C <= A} mu(B, C) = 0   for B < A.

    Rows of mu are cached per source element.  Elements are indexed in a
    linear extension (sorted by downset size, ties by handle order), so the
    recursion can fill each row in one ascending pass.
    """

    def __init__(self, elements: Sequence,
                 leq: Optional[Callable[[object, object], bool]] = None,
                 aut_orders: Optional[Sequence[int]] = None,
                 leq_matrix: Optional[np.ndarray] = None):
        given = list(elements)
        n = len(given)
        if n == 0:
            raise ValueError("level poset needs at least one element")
        if n > MAX_POSET_ELEMENTS:
            raise CapacityError(
                f"level poset with {n} elements exceeds the cap {MAX_POSET_ELEMENTS}"
            )
        perm = sorted(range(n), key=lambda i: given[i])
        elements = [given[i] for i in perm]
        if leq_matrix is not None:
            mat = np.asarray(leq_matrix, dtype=bool)[np.ix_(perm, perm)]
        elif leq is not None:
            mat = np.zeros((n, n), dtype=bool)
            for i, b in enumerate(elements):
                for j, a in enumerate(elements):
                    mat[i, j] = leq(b, a)
        else:
            raise ValueError("either leq or leq_matrix is required")
        if aut_orders is not None:
            aut_orders = [aut_orders[i] for i in perm]
        # partial-order sanity: reflexive, antisymmetric
        if not mat.diagonal().all():
            raise ValueError("level relation is not reflexive")
        if np.any(mat & mat.T & ~np.eye(n, dtype=bool)):
            raise ValueError("level relation is not antisymmetric")
        # linear extension: ascending downset size (equivalently descending
        # upset size), ties broken by handle order via the stable sort
        order = np.argsort(-mat.sum(axis=1), kind="stable")
        self.elements = [elements[i] for i in order]
        self._index = {g: i for i, g in enumerate(self.elements)}
        self._leq = mat[np.ix_(order, order)]
        if n <= 512:  # transitive closure must add nothing; skipped at scale
            closure = self._leq.astype(np.float32)
            if np.any((closure @ closure > 0.5) & ~self._leq):
                raise ValueError("level relation is not transitive")
        if aut_orders is None:
            self.aut_orders = [1] * n
        else:
            arr = list(aut_orders)
            self.aut_orders = [int(arr[i]) for i in order]
        self._mu_rows: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.elements)

    def index(self, g) -> int:
        try:
            return self._index[g]
        except KeyError:
            raise PosetDomainError(f"{g!r} is not an element of this level") from None

    def leq(self, b, a) -> bool:
        return bool(self._leq[self.index(b), self.index(a)])

    def upset_indices(self, b) -> np.ndarray:
        return np.flatnonzero(self._leq[self.index(b)])

    def _mu_row(self, bi: int) -> np.ndarray:
        """mu(B, A) for all A >= B, as a dense int64 row over poset indices."""
        row = self._mu_rows.get(bi)
        if row is not None:
            return row
        up = np.flatnonzero(self._leq[bi])  # ascending in the linear extension
        row = np.zeros(len(self.elements), dtype=np.int64)
        leq = self._leq
        row[bi] = 1
        for a in up:
            if a == bi:
                continue
            # interval [B, A): everything in the upset of B that is <= A
            below = up[leq[up, a]]
            s = int(row[below].sum()) - int(row[a])
            row[a] = -s
        self._mu_rows[bi] = row
        return row

    def mobius(self, b, a) -> int:
        """mu(B, A) via the recursive definition; PosetDomainError if B !<= A."""
        bi, ai = self.index(b), self.index(a)
        if not self._leq[bi, ai]:
            raise PosetDomainError(f"mobius undefined: {b!r} is not below {a!r}")
        return int(self._mu_row(bi)[ai])


def level_measure_v(poset: LevelPoset, b, measure: MomentMeasure) -> float:
    """The level-wise measure coefficient

        v_B = sum_{A >= B} mu(B, A) / |Aut(A)| * M_A,

    defined here only when every object in the level has trivial
    automorphisms (UnsupportedInstanceError otherwise).
    """
    _require_trivial_auts(poset)
    bi = poset.index(b)
    row = poset._mu_row(bi)
    up = poset.upset_indices(b)
    total = 0.0
    for ai in up:
        total += row[ai] * measure.value(poset.elements[ai])
    return total


def level_measure_v_table(poset: LevelPoset, measure: MomentMeasure) -> dict:
    """v_B for every B in the level, via one sparse mu matrix.

    Equivalent to calling level_measure_v per element but amortizes the
    Mobius rows across the whole level; used by check-measure and the
    verification sweep.
    """
    from scipy.sparse import csr_matrix

    _require_trivial_auts(poset)
    n = len(poset)
    matrix = getattr(poset, "_mu_csr", None)
    if matrix is None:
        rows = []
        cols = []
        data = []
        for bi in range(n):
            row = poset._mu_row(bi)
            nz = np.flatnonzero(row)
            rows.extend([bi] * len(nz))
            cols.extend(nz.tolist())
            data.extend(row[nz].tolist())
        matrix = csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.float64)
        poset._mu_csr = matrix
    mvec = np.array([measure.value(g) for g in poset.elements], dtype=np.float64)
    v = matrix @ mvec
    return {g: float(v[i]) for i, g in enumerate(poset.elements)}


def _require_trivial_auts(poset: LevelPoset) -> None:
    for g, a in zip(poset.elements, poset.aut_orders):
        if a != 1:
            raise UnsupportedInstanceError(
                f"level contains {g!r} with |Aut| = {a}; "
                "v is only defined here for trivial-automorphism levels"
            )


def mixed_moment(instance: CategoryInstance, measure: MomentMeasure,
                 objects: Sequence) -> float:
    """Mixed moment M^(j) of a tuple of objects:

        M^(j)_{(G_1..G_j)} = sum_H M_H

    over subobjects H of the product whose composition with every projection
    is an epimorphism.  Degenerates to M_G for a single object.
    """
    if len(objects) == 0:
        raise ValueError("mixed moment needs at least one object")
    for g in objects:
        instance.check_handle(g)
    total = 0.0
    for iso, mult in sorted(instance.subobjects_surjecting(tuple(objects))):
        total += mult * measure.value(iso)
    return total


@dataclass(frozen=True)
class EpiProductWitness:
    """One refuted candidate: test object K with mismatching epi counts."""

    candidate: object
    test_object: object
    required: int
    actual: int


@dataclass(frozen=True)
class EpiProductResult:
    """Outcome of the bounded epi-product search.

    ``found`` is the product object when the universal counting property
    held for every test object up to the bound; otherwise None, with one
    witness per refuted candidate that admitted both projections.
    """

    g: object
    h: object
    search_bound: int
    found: Optional[object]
    witnesses: tuple[EpiProductWitness, ...] = ()

    @property
    def exists(self) -> bool:
        return self.found is not None


def epi_product(instance: CategoryInstance, g, h,
                search_bound: int = 100) -> EpiProductResult:
    """Bounded search for the epi-product G x_epi H.

    A candidate P qualifies if it admits epimorphisms onto G and H and
    satisfies #Epi(K, P) = #Epi(K, G) * #Epi(K, H) for every object K of
    size <= search_bound.  Candidates and test objects run in canonical
    handle order, so results and witnesses are deterministic.
    """
    instance.check_handle(g)
    instance.check_handle(h)
    if search_bound < max(instance.size(g), instance.size(h)):
        raise ValueError(
            f"search bound {search_bound} is below the operand sizes "
            f"({instance.size(g)}, {instance.size(h)})"
        )
    shortcut = getattr(instance, "epi_product_closed_form", None)
    if shortcut is not None:
        return EpiProductResult(g=g, h=h, search_bound=search_bound,
                                found=shortcut(g, h))
    tests = list(instance.objects_up_to(search_bound))
    witnesses: list[EpiProductWitness] = []
    for p in tests:
        if instance.epi_count(p, g) < 1 or instance.epi_count(p, h) < 1:
            continue
        bad = None
        for k in tests:
            required = instance.epi_count(k, g) * instance.epi_count(k, h)
            actual = instance.epi_count(k, p)
            if actual != required:
                bad = EpiProductWitness(candidate=p, test_object=k,
                                        required=required, actual=actual)
                break
        if bad is None:
            return EpiProductResult(g=g, h=h, search_bound=search_bound, found=p,
                                    witnesses=tuple(witnesses))
        witnesses.append(bad)
    return EpiProductResult(g=g, h=h, search_bound=search_bound, found=None,
                            witnesses=tuple(witnesses))


def in_e2(instance: CategoryInstance, measure: MomentMeasure, g, h,
          search_bound: int = 100) -> bool:
    """Membership of (G, H) in E(2, M): the epi-product exists within the
    search bound and M is multiplicative on it (relative tolerance REL_TOL)."""
    res = epi_product(instance, g, h, search_bound=search_bound)
    if not res.exists:
        return False
    return close_rel(measure.value(res.found), measure.value(g) * measure.value(h))
