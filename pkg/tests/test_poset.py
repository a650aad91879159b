import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epicount.core import (
    LevelPoset,
    level_measure_v,
    level_measure_v_table,
    MomentMeasure,
)
from epicount.errors import CapacityError, PosetDomainError, UnsupportedInstanceError
from epicount.subsets import FinSet, SubsetsInstance, subsets_measure
from epicount.subsets import RSequence


def chain(n):
    return LevelPoset(list(range(n)), leq=lambda a, b: a <= b)


def test_chain_mobius():
    p = chain(5)
    # mu(i, i) = 1, mu(i, i+1) = -1, zero beyond
    for i in range(5):
        assert p.mobius(i, i) == 1
    for i in range(4):
        assert p.mobius(i, i + 1) == -1
    for i in range(3):
        assert p.mobius(i, i + 2) == 0


def test_mobius_incomparable_raises():
    p = LevelPoset(["a", "b"], leq=lambda x, y: x == y)
    with pytest.raises(PosetDomainError):
        p.mobius("a", "b")


def test_boolean_lattice_mobius_alternates():
    inst = SubsetsInstance()
    poset = inst.level(FinSet((1, 2, 3)))
    # mu(B, A) = (-1)^{|A| - |B|} for B <= A in the subset lattice
    for b in poset.elements:
        for a in poset.elements:
            if set(b.elements) <= set(a.elements):
                want = (-1) ** (len(a) - len(b))
                assert poset.mobius(b, a) == want


def test_zeta_mobius_inverse():
    # summing mu over every interval gives the identity matrix
    inst = SubsetsInstance()
    poset = inst.level(FinSet((1, 2, 3, 4)))
    n = len(poset)
    z = np.zeros((n, n))
    m = np.zeros((n, n))
    for i, b in enumerate(poset.elements):
        for j, a in enumerate(poset.elements):
            if set(b.elements) <= set(a.elements):
                z[i, j] = 1.0
                m[i, j] = poset.mobius(b, a)
    assert np.allclose(m @ z, np.eye(n))


def test_level_capacity():
    inst = SubsetsInstance()
    with pytest.raises(CapacityError):
        inst.level(FinSet(range(1, 14)))


def test_v_requires_trivial_automorphisms():
    p = LevelPoset([0, 1], leq=lambda a, b: a <= b, aut_orders=[1, 2])
    measure = MomentMeasure(name="ones", value_fn=lambda g: 1.0)
    with pytest.raises(UnsupportedInstanceError):
        level_measure_v(p, 0, measure)


def _r_array(arr):
    arr = np.asarray(arr, dtype=np.float64)
    return RSequence(key="test", fn=lambda n: float(arr[n - 1]),
                     vector_fn=lambda idx: arr[idx - 1])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=6))
def test_level_measures_are_outcome_probabilities(rs):
    # v_B is the probability that the sample meets D exactly in B, so the
    # table is the full outcome distribution of the level: nonnegative-ish
    # up to roundoff and summing to one
    d = len(rs)
    inst = SubsetsInstance()
    poset = inst.level(FinSet(range(1, d + 1)))
    measure = subsets_measure(_r_array(rs))
    table = level_measure_v_table(poset, measure)
    vals = np.array(list(table.values()))
    assert np.all(vals >= -1e-12)
    assert abs(vals.sum() - 1.0) <= 1e-10


def test_table_matches_single_element_path():
    inst = SubsetsInstance()
    poset = inst.level(FinSet((1, 2, 3, 4, 5)))
    measure = subsets_measure(_r_array([0.1, 0.9, 0.5, 0.3, 0.7]))
    table = level_measure_v_table(poset, measure)
    for b in poset.elements:
        assert abs(level_measure_v(poset, b, measure) - table[b]) <= 1e-12


def test_v_product_formula_spot():
    inst = SubsetsInstance()
    poset = inst.level(FinSet((1, 2)))
    measure = subsets_measure(_r_array([0.25, 0.5]))
    table = level_measure_v_table(poset, measure)
    assert abs(table[FinSet(())] - 0.75 * 0.5) <= 1e-12
    assert abs(table[FinSet((1,))] - 0.25 * 0.5) <= 1e-12
    assert abs(table[FinSet((2,))] - 0.75 * 0.5) <= 1e-12
    assert abs(table[FinSet((1, 2))] - 0.25 * 0.5) <= 1e-12
