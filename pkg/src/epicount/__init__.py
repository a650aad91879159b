"""Counting functions of random objects in a category: a simulation and
verification laboratory.

Two concrete instances are bundled: random subsets of the natural numbers
(independent membership probabilities r_n) and random finite abelian
groups (cokernels of random matrices over F_p).  The harness samples
counting functions N = sum_G f_n(G) #Epi(sample, G), compares empirical
moments against exact moment integrals and second/2k-th moment bounds,
and classifies which law-of-large-numbers hypotheses the configured
experiment satisfies.
"""

from .abgroups import AbelianGroupsInstance, AbGroup, cyclic, parse_abgroup
from .bounds import (
    corollary_denominator,
    corollary_denominator_grid,
    theoretical_bound_2,
    theoretical_bound_2_grid,
    theoretical_bound_2k,
    theoretical_bound_2k_grid,
)
from .config import load_config, parse_config_text, render_config
from .core import (
    LevelPoset,
    MomentMeasure,
    epi_product,
    in_e2,
    level_measure_v,
    level_measure_v_table,
    mixed_moment,
    ones_measure,
)
from .errors import (
    CapacityError,
    ConfigError,
    EpicountError,
    OutOfHorizonError,
    PosetDomainError,
    ScopeError,
    UncertifiedTailError,
    UnsupportedInstanceError,
)
from .harness import (
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
from .orderings import (
    Ordering,
    characteristic_ordering,
    classical_ordering,
    count,
    count_grid,
    maximal_subgroup_ordering,
    moment_integral,
    ordering_moments,
    parse_ordering,
    singleton_ordering,
)
from .subsets import (
    FinSet,
    RSequence,
    SubsetsInstance,
    cramer_preset,
    parse_finset,
    parse_r_preset,
    sample_subset,
    subsets_measure,
)

__version__ = "0.1.0"

__all__ = [
    "AbGroup",
    "AbelianGroupsInstance",
    "CapacityError",
    "ConfigError",
    "EpicountError",
    "ExperimentConfig",
    "FinSet",
    "GammaFamily",
    "LevelPoset",
    "MomentMeasure",
    "Ordering",
    "OutOfHorizonError",
    "PosetDomainError",
    "RSequence",
    "ScopeError",
    "SubsetsInstance",
    "UncertifiedTailError",
    "UnsupportedInstanceError",
    "build_report",
    "characteristic_ordering",
    "classical_ordering",
    "classify_convergence",
    "corollary_denominator",
    "corollary_denominator_grid",
    "count",
    "count_grid",
    "counterexample_demo",
    "cramer_preset",
    "cyclic",
    "empirical_central_moment",
    "epi_product",
    "exhaustive_moments",
    "in_e2",
    "level_measure_v",
    "level_measure_v_table",
    "load_config",
    "maximal_subgroup_ordering",
    "mixed_moment",
    "moment_integral",
    "ones_measure",
    "ordering_moments",
    "parse_abgroup",
    "parse_config_text",
    "parse_finset",
    "parse_gamma",
    "parse_ordering",
    "parse_r_preset",
    "render_config",
    "report_csv",
    "report_json",
    "run_trials",
    "sample_subset",
    "singleton_ordering",
    "subsets_measure",
    "theoretical_bound_2",
    "theoretical_bound_2_grid",
    "theoretical_bound_2k",
    "theoretical_bound_2k_grid",
    "__version__",
]
