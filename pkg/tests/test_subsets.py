import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epicount.errors import ConfigError, OutOfHorizonError
from epicount.subsets import (
    FinSet,
    SubsetsInstance,
    constant_preset,
    cramer_preset,
    parse_finset,
    parse_r_preset,
    sample_subset,
    subsets_measure,
    table_preset,
)


def test_finset_normalizes():
    a = FinSet((3, 1, 2, 2))
    assert a.elements == (1, 2, 3)
    assert str(a) == "{1,2,3}"
    assert a.max_element == 3
    assert FinSet(()).max_element == 0


def test_finset_rejects_nonpositive():
    with pytest.raises(ValueError):
        FinSet((0, 1))


def test_parse_finset():
    assert parse_finset("{1,2,3}") == FinSet((1, 2, 3))
    assert parse_finset("{}") == FinSet(())
    assert parse_finset("empty") == FinSet(())
    assert parse_finset("1,2") == FinSet((1, 2))
    assert parse_finset(" { 2 , 5 } ") == FinSet((2, 5))
    with pytest.raises(ConfigError):
        parse_finset("{a}")


def test_epi_count_is_containment():
    inst = SubsetsInstance()
    assert inst.epi_count(FinSet((1, 2, 3)), FinSet((1, 3))) == 1
    assert inst.epi_count(FinSet((1, 2)), FinSet((3,))) == 0
    assert inst.epi_count(FinSet(()), FinSet(())) == 1


def test_cramer_preset_values():
    r = cramer_preset()
    assert r.value(1) == 0.0
    assert r.value(2) == 1.0
    assert abs(r.value(3) - 1.0 / np.log(3.0)) <= 1e-15
    vals = r.values(100)
    assert vals[0] == 0.0 and vals[1] == 1.0
    assert abs(vals[99] - 1.0 / np.log(100.0)) <= 1e-15


def test_constant_preset_bounds():
    with pytest.raises(ConfigError):
        constant_preset(1.5)
    assert constant_preset(0.25).value(7) == 0.25


def test_parse_r_preset():
    assert parse_r_preset("cramer").key == "cramer"
    assert parse_r_preset("constant:0.5").value(3) == 0.5
    with pytest.raises(ConfigError):
        parse_r_preset("nope")
    with pytest.raises(ConfigError):
        parse_r_preset("constant:x")


def test_table_preset(tmp_path):
    path = tmp_path / "r.txt"
    path.write_text("0.5\n\n0.25\n1.0\n")
    r = table_preset(str(path))
    assert r.value(2) == 0.25
    assert list(r.values(3)) == [0.5, 0.25, 1.0]
    with pytest.raises(OutOfHorizonError):
        r.value(4)
    bad = tmp_path / "bad.txt"
    bad.write_text("0.5\nnot-a-number\n")
    with pytest.raises(ConfigError):
        table_preset(str(bad))


def test_measure_is_product_over_elements():
    measure = subsets_measure(constant_preset(0.5))
    assert measure.value(FinSet(())) == 1.0
    assert measure.value(FinSet((1, 2, 3))) == 0.125


@settings(max_examples=50, deadline=None)
@given(
    st.sets(st.integers(min_value=1, max_value=12), max_size=5),
    st.sets(st.integers(min_value=1, max_value=12), max_size=5),
)
def test_measure_multiplicative_on_disjoint(a_elems, b_elems):
    if a_elems & b_elems:
        return
    measure = subsets_measure(cramer_preset())
    a, b = FinSet(a_elems), FinSet(b_elems)
    lhs = measure.value(a.union(b))
    rhs = measure.value(a) * measure.value(b)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_sampling_deterministic():
    r = cramer_preset()
    s1 = sample_subset(r, 500, 42)
    s2 = sample_subset(r, 500, 42)
    assert np.array_equal(s1.membership, s2.membership)
    s3 = sample_subset(r, 500, 43)
    assert not np.array_equal(s1.membership, s3.membership)


def test_sample_respects_certain_and_impossible():
    r = cramer_preset()
    s = sample_subset(r, 50, 7)
    # r_1 = 0 and r_2 = 1 are hard constraints, not probabilities
    assert not s.membership[0]
    assert s.membership[1]


def test_sample_epi_count_and_horizon():
    r = constant_preset(1.0)
    s = sample_subset(r, 10, 0)
    assert s.epi_count(FinSet((1, 10))) == 1
    with pytest.raises(OutOfHorizonError):
        s.epi_count(FinSet((11,)))


def test_sample_mean_matches_measure():
    # 400 trials of {1..40} at r = 1/2: per-element frequency within 4
    # standard errors of 1/2
    r = constant_preset(0.5)
    hits = np.zeros(40)
    for t in range(400):
        hits += sample_subset(r, 40, 1000 + t).membership
    freq = hits / 400
    assert np.all(np.abs(freq - 0.5) <= 4 * np.sqrt(0.25 / 400))


def test_objects_up_to_enumerates_all_subsets():
    inst = SubsetsInstance()
    objs = list(inst.objects_up_to(4))
    assert len(objs) == 16
    assert objs[0] == FinSet(())
    assert len(set(objs)) == 16
    assert all(inst.size(g) <= 4 for g in objs)


def test_epi_product_is_union():
    inst = SubsetsInstance()
    res = inst.epi_product_closed_form(FinSet((1, 2)), FinSet((2, 3)))
    assert res == FinSet((1, 2, 3))
