"""Monte Carlo experiment harness.

Runs T independent sampled objects against an ordering over an n-grid,
compares empirical central moments with exact first moments and the
theoretical correlation bounds, and classifies which law-of-large-numbers
hypotheses the declared growth family supports.

Determinism contract: trial t draws from SeedSequence(master_seed,
spawn_key=(t,)) and nothing else; aggregation walks trials in index order;
reports are therefore byte-identical across runs and worker counts.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .abgroups import AbelianGroupsInstance, sample_corank_profile
from .bounds import (
    corollary_denominator_grid,
    theoretical_bound_2_grid,
    theoretical_bound_2k_grid,
)
from .core import MomentMeasure, ones_measure
from .errors import ConfigError, OutOfHorizonError, ScopeError
from .orderings import Ordering, count_grid, ordering_moments, parse_ordering
from .primes import primes_up_to
from .subsets import SubsetsInstance, parse_r_preset, sample_subset, subsets_measure

CSV_COLUMNS = (
    "n", "exact_mean", "emp_mean", "emp_cm_k", "bound", "ratio",
    "tail2", "tail3", "tail5",
)


# ---------------------------------------------------------------------------
# growth families


@dataclass(frozen=True)
class GammaFamily:
    """A declared growth family gamma, either in n directly or applied to
    the mean sequence (the psi route of the monotone strong law).

    Summability is table-driven from (kind, a, b), never estimated from
    finitely many terms: sums of 1/(n^a (log n)^b) converge iff a > 1 or
    (a = 1 and b > 1), and sums of 1/(n * psi(n)) for psi = t^a (log t)^b
    converge iff a > 0 or (a = 0 and b > 1).
    """

    kind: str            # "power" or "power-log"
    a: float
    b: float = 0.0
    psi_mode: bool = False  # gamma(n) = psi(mean_n) instead of a function of n

    def __post_init__(self):
        if self.kind not in ("power", "power-log"):
            raise ConfigError(f"unknown gamma family kind {self.kind!r}")

    def values(self, n_grid, mean_sequence) -> np.ndarray:
        if self.psi_mode:
            t = np.abs(np.asarray(mean_sequence, dtype=np.float64))
        else:
            t = np.asarray(n_grid, dtype=np.float64)
        t = np.maximum(t, 1e-300)
        out = t ** self.a
        if self.b:
            out = out * np.log(np.maximum(t, 1.0 + 1e-15)) ** self.b
        return out

    @property
    def sum_reciprocal_finite(self) -> bool:
        """Whether sum 1/gamma(n) < infinity is declared (plain mode only)."""
        if self.psi_mode:
            return False
        return self.a > 1 or (self.a == 1 and self.b > 1)

    @property
    def psi_condition(self) -> bool:
        """Whether sum 1/(n psi(n)) < infinity is declared (psi mode only)."""
        if not self.psi_mode:
            return False
        return self.a > 0 or (self.a == 0 and self.b > 1)

    @property
    def tends_to_infinity(self) -> bool:
        return self.a > 0 or (self.a == 0 and self.b > 0)

    def describe(self) -> str:
        base = "t" if self.psi_mode else "n"
        text = f"{base}^{self.a:g}"
        if self.b:
            text += f"*(log {base})^{self.b:g}"
        return f"psi({base}) = {text} applied to the mean" if self.psi_mode else text


def parse_gamma(spec: str) -> GammaFamily:
    """Family strings: "power:<a>", "power-log:<a>:<b>", and the psi-route
    variants "psi-power:<a>", "psi-power-log:<a>:<b>"."""
    parts = [p.strip() for p in spec.strip().split(":")]
    name = parts[0].lower()
    psi = name.startswith("psi-")
    if psi:
        name = name[4:]
    try:
        if name == "power" and len(parts) == 2:
            return GammaFamily("power", float(parts[1]), 0.0, psi)
        if name == "power-log" and len(parts) == 3:
            return GammaFamily("power-log", float(parts[1]), float(parts[2]), psi)
    except ValueError as exc:
        raise ConfigError(f"bad gamma parameter in {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown gamma family spec {spec!r}")


# ---------------------------------------------------------------------------
# experiment configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs; all fields are primitives so the
    config is hashable and picklable for worker processes."""

    instance: str            # "subsets" or "abgroups"
    measure: str             # subsets: r-preset spec; abgroups: "ones"
    ordering: str            # ordering spec string
    n_grid: tuple[int, ...]
    trials: int
    seed: int
    k: int = 2               # central moment order
    gamma: str = "power:2"
    horizon: Optional[int] = None   # subsets horizon / abgroups prime bound
    matrix_dim: int = 24     # corank sampler dimension
    threads: int = 1
    bound_tolerance: float = 25.0
    liminf_floor: float = 0.5
    corollary_eps: Optional[float] = None

    def __post_init__(self):
        if self.instance not in ("subsets", "abgroups"):
            raise ConfigError(f"unknown instance {self.instance!r}")
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
            raise ConfigError("n_grid must be a strictly increasing list of positive integers")
        object.__setattr__(self, "n_grid", grid)
        if self.trials < 2:
            raise ConfigError("trials must be at least 2")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.horizon is not None and self.horizon < grid[-1]:
            raise ConfigError(
                f"horizon {self.horizon} does not cover the n-grid maximum {grid[-1]}"
            )
        if self.matrix_dim < 1:
            raise ConfigError("matrix_dim must be positive")
        if self.corollary_eps is not None and self.corollary_eps <= 0:
            raise ConfigError("corollary_eps must be positive")
        parse_gamma(self.gamma)  # fail fast on a bad family

    @property
    def effective_horizon(self) -> int:
        return self.horizon if self.horizon is not None else self.n_grid[-1]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Per-checkpoint counting-function values for one sampled object."""

    trial: int
    n_grid: tuple[int, ...]
    values: np.ndarray
    seed_info: str = ""


# ---------------------------------------------------------------------------
# component construction (cached per process for worker reuse)

_COMPONENT_CACHE: dict = {}


def build_components(config: ExperimentConfig):
    """(instance, measure, ordering, r_sequence-or-None) for a config."""
    key = (config.instance, config.measure, config.ordering)
    hit = _COMPONENT_CACHE.get(key)
    if hit is not None:
        return hit
    if config.instance == "subsets":
        inst = SubsetsInstance()
        r = parse_r_preset(config.measure)
        measure = subsets_measure(r)
    else:
        inst = AbelianGroupsInstance()
        if config.measure.strip() != "ones":
            raise ConfigError(
                f"abgroups experiments support the measure 'ones', got {config.measure!r}"
            )
        r = None
        measure = ones_measure()
    ordering = parse_ordering(config.ordering, inst).ordering
    built = (inst, measure, ordering, r)
    _COMPONENT_CACHE[key] = built
    return built


def _check_coverage(config: ExperimentConfig) -> None:
    # all bundled families have support keyed at or below n, so the sampler
    # covers support(max n) exactly when the truncation reaches max n
    top = config.n_grid[-1]
    if config.effective_horizon < top:
        raise OutOfHorizonError(
            f"truncation {config.effective_horizon} does not cover the "
            f"n-grid maximum {top}"
        )


def _trial_values(config: ExperimentConfig, t: int) -> np.ndarray:
    _, _, ordering, r = build_components(config)
    ss = np.random.SeedSequence(config.seed, spawn_key=(t,))
    rng = np.random.Generator(np.random.PCG64(ss))
    info = f"SeedSequence({config.seed}, spawn_key=({t},))"
    if config.instance == "subsets":
        sample = sample_subset(r, config.effective_horizon, rng, seed_info=info)
    else:
        sample = sample_corank_profile(
            config.effective_horizon, config.matrix_dim, rng, seed_info=info
        )
    return count_grid(sample, ordering, np.asarray(config.n_grid, dtype=np.int64))


def _trial_worker(payload) -> np.ndarray:
    config, t = payload
    return _trial_values(config, t)


def run_trials(config: ExperimentConfig) -> list[Trajectory]:
    """T independent trajectories, reproducible and worker-count independent:
    trial t's stream is SeedSequence(seed, spawn_key=(t,)) and results are
    assembled in trial order."""
    _check_coverage(config)
    build_components(config)  # surface config errors before spawning workers
    payloads = [(config, t) for t in range(config.trials)]
    if config.threads == 1:
        rows = [_trial_worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(_trial_worker, payloads))
    return [
        Trajectory(
            trial=t,
            n_grid=config.n_grid,
            values=np.asarray(row, dtype=np.float64),
            seed_info=f"SeedSequence({config.seed}, spawn_key=({t},))",
        )
        for t, row in enumerate(rows)
    ]


def empirical_central_moment(trajs: list[Trajectory], n: int, k: int,
                             exact_mean: float) -> float:
    """(1/T) sum_t |N_t(n) - exact_mean|^k, centered at the analytic mean,
    never the sample mean."""
    if not trajs:
        raise ValueError("need at least one trajectory")
    idx = trajs[0].n_grid.index(int(n))
    vals = np.array([tr.values[idx] for tr in trajs])
    return float(np.mean(np.abs(vals - float(exact_mean)) ** k))


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Classification:
    label: str               # "SLLN-ii" | "SLLN-iii" | "WLLN" | "none"
    hypotheses: dict
    notes: str = ""


def classify_convergence(bound_fit, gamma: GammaFamily, mean_sequence, *,
                         liminf_floor: float = 0.5,
                         bound_tolerance: float = 25.0,
                         nonnegative: bool = False,
                         counts_monotone: bool = False,
                         gamma_values=None) -> Classification:
    """Check which hypotheses the grid supports and emit the strongest
    conclusion label.

    bound_fit is the per-checkpoint ratio (empirical k-th central moment) *
    gamma(n) / |mean|^k; its boundedness (sup <= tolerance) is the moment
    hypothesis.  liminf positivity is checked against a declared floor.
    Summability facts come from the family table only.
    """
    fit = np.asarray(bound_fit, dtype=np.float64)
    means = np.asarray(mean_sequence, dtype=np.float64)
    liminf_ok = bool(len(means) > 0 and np.min(np.abs(means)) >= liminf_floor)
    fit_sup = float(np.max(fit)) if len(fit) else math.inf
    moment_ok = bool(np.isfinite(fit_sup) and fit_sup <= bound_tolerance)
    gamma_inf = gamma.tends_to_infinity
    if gamma.psi_mode:
        gv = np.asarray(gamma_values, dtype=np.float64) if gamma_values is not None \
            else gamma.values(np.arange(1, len(means) + 1), means)
        # psi o mean reaches infinity only along a growing mean; necessary
        # condition observable on the grid: nondecreasing and increasing overall
        gamma_inf = gamma_inf and bool(
            len(gv) >= 2 and np.all(np.diff(gv) >= 0) and gv[-1] > gv[0]
        )
    hypotheses = {
        "liminf_positive": liminf_ok,
        "moment_bound_holds": moment_ok,
        "gamma_to_infinity": gamma_inf,
        "sum_reciprocal_gamma_finite": gamma.sum_reciprocal_finite,
        "psi_condition": gamma.psi_condition,
        "ordering_nonnegative": bool(nonnegative),
        "counts_monotone": bool(counts_monotone),
        "bound_fit_sup": fit_sup,
        "mean_min_abs": float(np.min(np.abs(means))) if len(means) else 0.0,
    }
    wlln = liminf_ok and moment_ok and gamma_inf
    slln_ii = wlln and gamma.sum_reciprocal_finite
    slln_iii = wlln and gamma.psi_condition and nonnegative and counts_monotone
    if slln_ii:
        label = "SLLN-ii"
    elif slln_iii:
        label = "SLLN-iii"
    elif wlln:
        label = "WLLN"
    else:
        label = "none"
    return Classification(label=label, hypotheses=hypotheses,
                          notes=f"gamma family: {gamma.describe()}")


# ---------------------------------------------------------------------------
# report assembly


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    config: ExperimentConfig
    n_grid: tuple[int, ...]
    exact_means: np.ndarray
    abs_means: np.ndarray
    emp_means: np.ndarray
    emp_var: np.ndarray
    emp_cm_k: np.ndarray
    bound: np.ndarray          # k-th-order bound (2nd-moment bound when k = 2)
    bound2: np.ndarray         # always the 2nd-moment bound, drives the tails
    gamma_values: np.ndarray
    ratio: np.ndarray          # emp_cm_k * gamma / |mean|^k
    tails: dict                # {2: freq, 3: freq, 5: freq} at q*sqrt(bound2)
    classification: Classification
    fitted: dict
    corrected_means: np.ndarray
    truncation_note: str
    trajectories: list
    corollary_envelope: Optional[np.ndarray] = None
    corollary_ratios: Optional[np.ndarray] = None  # (T, grid) |N|/denominator


def _corrected_means(config: ExperimentConfig, f: Ordering,
                     exact: np.ndarray) -> tuple[np.ndarray, str]:
    if config.instance == "subsets":
        return exact.copy(), (
            "horizon covers the ordering support; the sampled mean target "
            "equals the exact moment"
        )
    ps = primes_up_to(config.n_grid[-1]).astype(np.float64)
    if f.vector_support_fn is not None:
        _, weights = f.vector_support_fn(config.n_grid[-1])
    else:
        weights = np.array([f.value(config.n_grid[-1], g)
                            for g in f.support_fn(config.n_grid[-1])])
    bias = weights * ps ** (-float(config.matrix_dim))
    corrected_full = np.cumsum(weights - bias)
    idx = np.searchsorted(ps, np.asarray(config.n_grid), side="right")
    cs = np.concatenate(([0.0], corrected_full))
    corrected = cs[idx]
    max_bias = float(np.sum(bias))
    note = (
        f"per-prime truncation at matrix dimension N={config.matrix_dim}: "
        f"E[p^corank - 1] = 1 - p^-N, so the sampled mean target is the "
        f"corrected value (total offset <= {max_bias:.3e})"
    )
    return corrected, note


def build_report(config: ExperimentConfig) -> ConvergenceReport:
    inst, measure, f, _ = build_components(config)
    grid = np.asarray(config.n_grid, dtype=np.int64)
    om = ordering_moments(f, grid, measure)
    exact = om.integrals
    trajs = run_trials(config)
    values = np.stack([tr.values for tr in trajs])          # (T, G)
    devs = values - exact[None, :]
    emp_means = values.mean(axis=0)
    emp_var = np.mean(devs ** 2, axis=0)
    emp_cm_k = np.mean(np.abs(devs) ** config.k, axis=0)

    bound2 = theoretical_bound_2_grid(f, grid, measure, inst)
    if config.k == 2:
        bound = bound2
    elif config.k % 2 == 0:
        bound = theoretical_bound_2k_grid(f, grid, measure, inst, config.k // 2)
    else:
        bound = np.full(len(grid), np.nan)  # odd orders have no tuple bound

    gamma = parse_gamma(config.gamma)
    gamma_values = gamma.values(grid, exact)
    denom = np.abs(exact) ** config.k
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(denom > 0, emp_cm_k * gamma_values / denom, np.inf)

    sigma = np.sqrt(np.maximum(bound2, 0.0))
    tails = {
        q: np.mean(np.abs(devs) > q * sigma[None, :], axis=0) for q in (2, 3, 5)
    }

    classification = classify_convergence(
        ratio, gamma, exact,
        liminf_floor=config.liminf_floor,
        bound_tolerance=config.bound_tolerance,
        nonnegative=f.nonnegative,
        counts_monotone=f.monotone_in_n,
        gamma_values=gamma_values,
    )

    with np.errstate(divide="ignore", invalid="ignore"):
        var_ratio = np.where(bound2 > 0, emp_var / bound2, 0.0)
        cmk_ratio = np.where(np.isfinite(bound) & (bound > 0),
                             emp_cm_k / bound, 0.0)
    fitted = {
        "variance_bound_C": float(np.max(var_ratio)),
        "bound_fit_sup": float(np.max(ratio)),
        "moment_bound_C": float(np.max(cmk_ratio)),
    }

    corrected, note = _corrected_means(config, f, exact)

    envelope = None
    cratios = None
    if config.corollary_eps is not None:
        dens = corollary_denominator_grid(
            f, grid, measure, inst, config.k, config.corollary_eps
        )
        cratios = np.abs(values) / dens[None, :]
        envelope = cratios.max(axis=0)

    return ConvergenceReport(
        config=config,
        n_grid=config.n_grid,
        exact_means=exact,
        abs_means=om.abs_integrals,
        emp_means=emp_means,
        emp_var=emp_var,
        emp_cm_k=emp_cm_k,
        bound=bound,
        bound2=bound2,
        gamma_values=gamma_values,
        ratio=ratio,
        tails=tails,
        classification=classification,
        fitted=fitted,
        corrected_means=corrected,
        truncation_note=note,
        trajectories=trajs,
        corollary_envelope=envelope,
        corollary_ratios=cratios,
    )


# ---------------------------------------------------------------------------
# artifact serialization


def report_csv(report: ConvergenceReport) -> str:
    """Plot-ready per-checkpoint table; floats via repr for byte-stable
    round-trips."""
    lines = [",".join(CSV_COLUMNS)]
    for i, n in enumerate(report.n_grid):
        cells = [
            str(int(n)),
            repr(float(report.exact_means[i])),
            repr(float(report.emp_means[i])),
            repr(float(report.emp_cm_k[i])),
            repr(float(report.bound[i])),
            repr(float(report.ratio[i])),
            repr(float(report.tails[2][i])),
            repr(float(report.tails[3][i])),
            repr(float(report.tails[5][i])),
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def report_json(report: ConvergenceReport) -> str:
    cfg = report.config
    payload = {
        "config": {
            "instance": cfg.instance,
            "measure": cfg.measure,
            "ordering": cfg.ordering,
            "n_grid": list(cfg.n_grid),
            "trials": cfg.trials,
            "seed": cfg.seed,
            "k": cfg.k,
            "gamma": cfg.gamma,
            # threads is runtime plumbing, not science: reports must be
            # byte-identical across worker counts, so it is not echoed
            "horizon": cfg.effective_horizon,
            "matrix_dim": cfg.matrix_dim,
            "bound_tolerance": cfg.bound_tolerance,
            "liminf_floor": cfg.liminf_floor,
            "corollary_eps": cfg.corollary_eps,
        },
        "seeds": {
            "master_seed": cfg.seed,
            "trial_scheme": "SeedSequence(master_seed, spawn_key=(trial,))",
        },
        "classification": {
            "label": report.classification.label,
            "hypotheses": report.classification.hypotheses,
            "notes": report.classification.notes,
        },
        "fitted_constants": report.fitted,
        "exact_means": [float(x) for x in report.exact_means],
        "corrected_means": [float(x) for x in report.corrected_means],
        "truncation_note": report.truncation_note,
        "gamma_values": [float(x) for x in report.gamma_values],
    }
    if report.corollary_envelope is not None:
        payload["corollary"] = {
            "eps": cfg.corollary_eps,
            "envelope_max_ratio": [float(x) for x in report.corollary_envelope],
            "per_trial_ratios": [
                [float(x) for x in row] for row in report.corollary_ratios
            ],
            "note": (
                "necessary-condition trend check: the max-over-trials "
                "normalized deviation should decrease along the n-grid; "
                "this does not verify the almost-sure limit"
            ),
        }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# exact small-world enumeration


def exhaustive_moments(f: Ordering, n_grid, r_values, k: int = 2) -> dict:
    """Exact mean / variance / k-th central moment of the counting function
    over every outcome of a truncated subsets world.

    r_values has one membership probability per element 1..h; all 2^h
    outcomes are enumerated with their exact probabilities.
    """
    r = np.asarray(r_values, dtype=np.float64)
    h = len(r)
    if h > 20:
        raise ScopeError(f"exhaustive enumeration over horizon {h} is too large")
    outcomes = np.arange(1 << h, dtype=np.int64)
    bits = ((outcomes[:, None] >> np.arange(h)) & 1).astype(bool)  # (2^h, h)
    probs = np.prod(np.where(bits, r, 1.0 - r), axis=1)
    grid = [int(n) for n in n_grid]
    out = {}
    for n in grid:
        counts = np.zeros(len(outcomes))
        for g in f.support_fn(n):
            v = f.value(n, g)
            if v == 0.0:
                continue
            elems = np.array(sorted(g), dtype=np.int64)
            if len(elems) and elems[-1] > h:
                raise OutOfHorizonError(
                    f"support object {g} exceeds enumeration horizon {h}"
                )
            mask = np.all(bits[:, elems - 1], axis=1) if len(elems) else np.ones(
                len(outcomes), dtype=bool
            )
            counts += v * mask
        mean = float(np.sum(probs * counts))
        var = float(np.sum(probs * (counts - mean) ** 2))
        cm_k = float(np.sum(probs * np.abs(counts - mean) ** k))
        out[n] = {"mean": mean, "variance": var, f"cm_{k}": cm_k}
    return out


# ---------------------------------------------------------------------------
# the dependent-sequence cautionary demo


@dataclass(frozen=True)
class CounterexampleReport:
    trials: int
    zero_fraction: float
    expected: float
    band: float               # 4 * sqrt(p(1-p)/T)
    ratio_values: tuple       # distinct observed S_n / E[S_n] at the last n


def counterexample_demo(trials: int, seed: int, n_grid=(10, 100, 1000)) -> CounterexampleReport:
    """One Bernoulli(1/2) flip X per trial drives the whole dependent
    sequence X_i = X/i: partial sums are X * H_n, so half of all
    trajectories are identically zero and the ratio to the expected value
    H_n/2 sits at 0 or 2 forever.  Classical o(n) error holds; the
    relative-error law fails."""
    if trials < 2:
        raise ConfigError("trials must be at least 2")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    x = rng.integers(0, 2, size=trials)
    zero_fraction = float(np.mean(x == 0))
    h_last = float(np.sum(1.0 / np.arange(1, int(n_grid[-1]) + 1)))
    ratios = sorted(set(float(v) for v in (x * h_last) / (h_last / 2.0)))
    return CounterexampleReport(
        trials=trials,
        zero_fraction=zero_fraction,
        expected=0.5,
        band=4.0 * math.sqrt(0.25 / trials),
        ratio_values=tuple(ratios),
    )
