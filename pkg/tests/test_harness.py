import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epicount.errors import ConfigError, OutOfHorizonError, ScopeError
from epicount.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    GammaFamily,
    build_report,
    classify_convergence,
    counterexample_demo,
    empirical_central_moment,
    exhaustive_moments,
    parse_gamma,
    report_csv,
    report_json,
    run_trials,
)
from epicount.orderings import singleton_ordering


def _subsets_config(**overrides):
    base = dict(
        instance="subsets",
        measure="constant:0.5",
        ordering="singletons",
        n_grid=(5, 10),
        trials=8,
        seed=4242,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# gamma families


def test_gamma_summability_table():
    assert parse_gamma("power:2").sum_reciprocal_finite
    assert not parse_gamma("power:1").sum_reciprocal_finite
    assert parse_gamma("power-log:1:1.5").sum_reciprocal_finite
    assert not parse_gamma("power-log:1:1").sum_reciprocal_finite
    assert not parse_gamma("power:0.5").sum_reciprocal_finite

    psi = parse_gamma("psi-power:0.5")
    assert psi.psi_mode and psi.psi_condition
    assert not psi.sum_reciprocal_finite  # plain-mode fact only
    assert not parse_gamma("psi-power:0").psi_condition
    assert parse_gamma("psi-power-log:0:2").psi_condition
    assert not parse_gamma("power:2").psi_condition


def test_gamma_tends_to_infinity():
    assert parse_gamma("power:2").tends_to_infinity
    assert parse_gamma("power-log:0:1").tends_to_infinity
    assert not parse_gamma("power:0").tends_to_infinity
    assert not parse_gamma("power:-1").tends_to_infinity


def test_gamma_values_plain_and_psi():
    g = parse_gamma("power:2")
    np.testing.assert_allclose(g.values([1, 10], None), [1.0, 100.0])
    gl = parse_gamma("power-log:1:1")
    np.testing.assert_allclose(gl.values([math.e], None), [math.e], rtol=1e-12)
    psi = parse_gamma("psi-power:0.5")
    np.testing.assert_allclose(psi.values([7, 8], [4.0, 9.0]), [2.0, 3.0])


def test_parse_gamma_rejects_bad_specs():
    for spec in ("cubic", "power", "power:x", "power-log:1", "psi-power:1:2:3"):
        with pytest.raises(ConfigError):
            parse_gamma(spec)


def test_gamma_family_kind_checked():
    with pytest.raises(ConfigError):
        GammaFamily("exp", 1.0)


# ---------------------------------------------------------------------------
# experiment configuration


def test_config_validation():
    with pytest.raises(ConfigError):
        _subsets_config(instance="widgets")
    with pytest.raises(ConfigError):
        _subsets_config(n_grid=(10, 5))
    with pytest.raises(ConfigError):
        _subsets_config(n_grid=())
    with pytest.raises(ConfigError):
        _subsets_config(trials=1)
    with pytest.raises(ConfigError):
        _subsets_config(k=0)
    with pytest.raises(ConfigError):
        _subsets_config(threads=0)
    with pytest.raises(ConfigError):
        _subsets_config(horizon=7)  # does not cover n_grid max 10
    with pytest.raises(ConfigError):
        _subsets_config(corollary_eps=0.0)
    with pytest.raises(ConfigError):
        _subsets_config(gamma="nope")
    with pytest.raises(ConfigError):
        _subsets_config(matrix_dim=0)


def test_config_effective_horizon():
    assert _subsets_config().effective_horizon == 10
    assert _subsets_config(horizon=64).effective_horizon == 64


# ---------------------------------------------------------------------------
# trials


def test_run_trials_deterministic_and_thread_independent():
    cfg = _subsets_config(trials=6)
    a = run_trials(cfg)
    b = run_trials(cfg)
    c = run_trials(dataclasses.replace(cfg, threads=2))
    for x, y, z in zip(a, b, c):
        np.testing.assert_array_equal(x.values, y.values)
        np.testing.assert_array_equal(x.values, z.values)
    assert a[3].seed_info == "SeedSequence(4242, spawn_key=(3,))"


def test_run_trials_certain_world_reproduces_exact_counts():
    # r identically 1 makes every world the full set, so each trajectory
    # is the deterministic count sequence
    cfg = _subsets_config(measure="constant:1.0", trials=2)
    for tr in run_trials(cfg):
        np.testing.assert_array_equal(tr.values, [5.0, 10.0])


def test_run_trials_seed_changes_samples():
    cfg = _subsets_config(trials=4)
    other = dataclasses.replace(cfg, seed=cfg.seed + 1)
    a = np.array([tr.values for tr in run_trials(cfg)])
    b = np.array([tr.values for tr in run_trials(other)])
    assert not np.array_equal(a, b)


def test_empirical_central_moment_matches_closed_form():
    cfg = _subsets_config(n_grid=(10,), trials=400)
    trajs = run_trials(cfg)
    got = empirical_central_moment(trajs, 10, 2, exact_mean=5.0)
    # Var = sum r(1-r) = 2.5; estimator SE = sqrt((mu4 - var^2)/T)
    se = math.sqrt((17.5 - 2.5 ** 2) / 400)
    assert abs(got - 2.5) <= 4 * se


# ---------------------------------------------------------------------------
# classification


def test_classify_slln_ii():
    gamma = parse_gamma("power:2")
    cls = classify_convergence([0.5, 0.8], gamma, [2.0, 3.0])
    assert cls.label == "SLLN-ii"
    assert cls.hypotheses["sum_reciprocal_gamma_finite"]
    assert cls.hypotheses["moment_bound_holds"]


def test_classify_slln_iii_needs_monotone_nonnegative():
    gamma = parse_gamma("psi-power:0.5")
    means = [2.0, 3.0, 5.0]
    full = classify_convergence([0.5, 0.5, 0.5], gamma, means,
                                nonnegative=True, counts_monotone=True)
    assert full.label == "SLLN-iii"
    weak = classify_convergence([0.5, 0.5, 0.5], gamma, means,
                                nonnegative=True, counts_monotone=False)
    assert weak.label == "WLLN"


def test_classify_wlln_only():
    gamma = parse_gamma("power:0.5")
    cls = classify_convergence([1.0, 1.0], gamma, [2.0, 3.0])
    assert cls.label == "WLLN"


def test_classify_none_cases():
    gamma = parse_gamma("power:2")
    # zero means break the liminf hypothesis
    assert classify_convergence([1.0], gamma, [0.0]).label == "none"
    # unbounded fit breaks the moment hypothesis
    big = classify_convergence([1.0, 1e6], gamma, [2.0, 3.0],
                               bound_tolerance=25.0)
    assert big.label == "none"
    # gamma that does not tend to infinity proves nothing
    flat = classify_convergence([0.5], parse_gamma("power:0"), [2.0])
    assert flat.label == "none"


def test_classify_psi_route_requires_growing_means():
    gamma = parse_gamma("psi-power:0.5")
    cls = classify_convergence([0.5, 0.5], gamma, [3.0, 3.0],
                               nonnegative=True, counts_monotone=True)
    # psi(mean) stalls, so gamma -> infinity is not observable
    assert cls.label == "none"
    assert not cls.hypotheses["gamma_to_infinity"]


# ---------------------------------------------------------------------------
# reports


def test_build_report_subsets_fields():
    cfg = _subsets_config(trials=60)
    report = build_report(cfg)
    np.testing.assert_allclose(report.exact_means, [2.5, 5.0], rtol=1e-12)
    np.testing.assert_allclose(report.bound2, [2.5, 5.0], rtol=1e-12)
    np.testing.assert_array_equal(report.corrected_means, report.exact_means)
    se = np.sqrt(np.array([1.25, 2.5]) / 60)
    assert np.all(np.abs(report.emp_means - report.exact_means) <= 4 * se)
    assert report.classification.label == "SLLN-ii"
    assert set(report.tails) == {2, 3, 5}
    for q in (2, 3, 5):
        assert np.all(report.tails[q] >= 0.0) and np.all(report.tails[q] <= 1.0)
    # larger cutoffs can only shrink the tail frequency
    assert np.all(report.tails[5] <= report.tails[2])
    expected_ratio = report.emp_cm_k * report.gamma_values / report.exact_means ** 2
    np.testing.assert_allclose(report.ratio, expected_ratio, rtol=1e-12)
    assert report.corollary_envelope is None
    assert "variance_bound_C" in report.fitted and "moment_bound_C" in report.fitted


def test_build_report_corollary_envelope():
    cfg = _subsets_config(trials=20, corollary_eps=0.5)
    report = build_report(cfg)
    assert report.corollary_envelope is not None
    assert report.corollary_ratios.shape == (20, 2)
    np.testing.assert_allclose(report.corollary_envelope,
                               np.max(report.corollary_ratios, axis=0))


def test_build_report_abgroups_corrected_means():
    cfg = ExperimentConfig(instance="abgroups", measure="ones",
                           ordering="maximal-subgroups", n_grid=(10,),
                           trials=30, seed=77, gamma="psi-power:0.5",
                           matrix_dim=8)
    report = build_report(cfg)
    # finite matrix dimension biases each p-term down by p^-dim
    assert 0.0 < float(report.corrected_means[0]) < float(report.exact_means[0])
    assert report.truncation_note
    se = math.sqrt(float(report.emp_var[0]) / 30)
    assert abs(float(report.emp_means[0]) - float(report.corrected_means[0])) <= 4 * se


def test_report_csv_shape_and_stability():
    cfg = _subsets_config(trials=12)
    r1 = build_report(cfg)
    r2 = build_report(dataclasses.replace(cfg, threads=2))
    text = report_csv(r1)
    assert text == report_csv(r2)
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + len(cfg.n_grid)
    # floats written via repr round-trip exactly
    first = lines[1].split(",")
    assert float(first[1]) == float(r1.exact_means[0])


def test_report_json_omits_threads_and_echoes_config():
    cfg = _subsets_config(trials=12, threads=2)
    payload = json.loads(report_json(build_report(cfg)))
    assert "threads" not in payload["config"]
    assert payload["config"]["seed"] == 4242
    assert payload["config"]["horizon"] == 10
    assert payload["seeds"]["trial_scheme"] == \
        "SeedSequence(master_seed, spawn_key=(trial,))"
    assert payload["classification"]["label"] == "SLLN-ii"
    assert payload["exact_means"] == [2.5, 5.0]
    assert "corollary" not in payload


# ---------------------------------------------------------------------------
# exact enumeration


def test_exhaustive_moments_exact_values():
    table = exhaustive_moments(singleton_ordering(), (5, 10), np.full(10, 0.5))
    assert abs(table[10]["mean"] - 5.0) <= 1e-12
    assert abs(table[10]["variance"] - 2.5) <= 1e-12
    assert abs(table[10]["cm_2"] - 2.5) <= 1e-12
    assert abs(table[5]["mean"] - 2.5) <= 1e-12


def test_exhaustive_moments_guards():
    with pytest.raises(ScopeError):
        exhaustive_moments(singleton_ordering(), (21,), np.full(21, 0.5))
    with pytest.raises(OutOfHorizonError):
        exhaustive_moments(singleton_ordering(), (12,), np.full(10, 0.5))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=8))
def test_exhaustive_variance_is_sum_of_bernoulli_variances(rs):
    r = np.array(rs)
    h = len(r)
    table = exhaustive_moments(singleton_ordering(), (h,), r)
    want_mean = float(np.sum(r))
    want_var = float(np.sum(r * (1.0 - r)))
    assert abs(table[h]["mean"] - want_mean) <= 1e-10
    assert abs(table[h]["variance"] - want_var) <= 1e-10


# ---------------------------------------------------------------------------
# dependent-sequence demo


def test_counterexample_demo_structure():
    rep = counterexample_demo(10000, seed=808)
    assert rep.expected == 0.5
    assert abs(rep.zero_fraction - 0.5) <= rep.band
    assert set(rep.ratio_values) <= {0.0, 2.0}
    again = counterexample_demo(10000, seed=808)
    assert again.zero_fraction == rep.zero_fraction


def test_counterexample_demo_rejects_tiny_runs():
    with pytest.raises(ConfigError):
        counterexample_demo(1, seed=1)
