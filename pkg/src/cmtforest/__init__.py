"""Coalescing-trajectory forests on lattices and point clouds, with
exact kernel diagnostics and Monte-Carlo structure probes."""

from .errors import CyclicComponent, EmptyWindow, ConfigError
from .forest import (
    ForestWindow,
    ancestral_line,
    build_forest,
    classify_component,
    components,
    descendants,
    dump_forest,
    height,
    level_set,
    load_forest,
    reverse_jump,
)
from .lattice import (
    JumpDistribution,
    check_cycle_free,
    check_model_conditions,
    check_weak_aperiodicity,
    check_weak_irreducibility,
    even_sublattice,
    integer_lattice,
    sample_lattice_cmt,
    uniform_jumps,
)
from .models import (
    canopy_cmt,
    coalescing_mc,
    coalescing_srw,
    nguyen_model,
    nguyen_variant,
    renewal_model,
    voter_stationary,
)
from .chains import (
    green_function,
    kernel_power,
    meet_and_stick_coupling,
    path_collision_estimate,
    shift_coupling,
    tv_consecutive,
    tv_profile,
)
from .points import (
    StripConfig,
    discrete_strip,
    howard_model,
    level_csv,
    sample_bernoulli,
    sample_poisson,
    strip_point_map,
)
from .wusf import (
    conditional_wilson,
    covering_coupling_check,
    lerw,
    spanning_trees,
    wilson_ust,
    wired_ball,
    wusf_window,
)
from .analysis import (
    canopy_distinguishability_demo,
    cluster_frequency,
    component_statistic_survey,
    connectivity_decay_probe,
    count_components_probe,
    green_table,
    in_degree_profile,
    level_set_bijection,
    nested_level_average,
    one_endedness_probe,
)
from .seeds import derive_seed, rng_for

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CyclicComponent",
    "EmptyWindow",
    "ForestWindow",
    "JumpDistribution",
    "StripConfig",
    "ancestral_line",
    "build_forest",
    "canopy_cmt",
    "canopy_distinguishability_demo",
    "check_cycle_free",
    "check_model_conditions",
    "check_weak_aperiodicity",
    "check_weak_irreducibility",
    "classify_component",
    "cluster_frequency",
    "coalescing_mc",
    "coalescing_srw",
    "component_statistic_survey",
    "components",
    "conditional_wilson",
    "connectivity_decay_probe",
    "count_components_probe",
    "covering_coupling_check",
    "derive_seed",
    "descendants",
    "discrete_strip",
    "dump_forest",
    "even_sublattice",
    "green_function",
    "green_table",
    "height",
    "howard_model",
    "in_degree_profile",
    "integer_lattice",
    "kernel_power",
    "lerw",
    "level_csv",
    "level_set",
    "level_set_bijection",
    "load_forest",
    "meet_and_stick_coupling",
    "nested_level_average",
    "nguyen_model",
    "nguyen_variant",
    "one_endedness_probe",
    "path_collision_estimate",
    "renewal_model",
    "reverse_jump",
    "rng_for",
    "sample_bernoulli",
    "sample_lattice_cmt",
    "sample_poisson",
    "shift_coupling",
    "spanning_trees",
    "strip_point_map",
    "tv_consecutive",
    "tv_profile",
    "uniform_jumps",
    "voter_stationary",
    "wilson_ust",
    "wired_ball",
    "wusf_window",
]
