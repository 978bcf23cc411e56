"""Desk-scale toolkit for Følner sequences, Delone patterns and ergodic averages
on Z^d and the discrete Heisenberg group."""

__version__ = "0.1.0"

from .groups import (  # noqa: E402
    H3,
    Z1,
    Z2,
    FolnerSequence,
    GroupModel,
    Region,
    ResourceCapError,
    folner_defect,
    left_boundary,
    parse_group,
    right_boundary,
    set_element_cap,
    word_ball,
)
from .patterns import (  # noqa: E402
    Coloring,
    Patch,
    Pattern,
    build_coloring,
    delta_occurs,
    delta_similar,
    flc_census,
    patch_distance,
    patch_extract,
)
from .repetitivity import (  # noqa: E402
    UNCERTIFIED,
    linear_repetitivity_fit,
    repetitivity_index,
    repetitivity_portion,
    temp_lr_crosscheck,
)
from .tiling import (  # noqa: E402
    n_epsilon,
    quasi_tile,
    select_prototiles,
    tiling_subadditivity_check,
    verify_tiling,
)
from .ergodic import (  # noqa: E402
    HullPoint,
    WeightFunction,
    banach_density,
    convergence_experiment,
    envelope_sweep,
    pattern_frequency,
    test_axioms,
    weight_count,
    weight_wf,
)
from .spectral import (  # noqa: E402
    HoppingOperator,
    eigenvalue_counting,
    empirical_distribution,
    ids_convergence,
    interior,
    restrict,
    sup_distance,
)
from .heisenberg import exact_ball_volume, mc_ball_volume  # noqa: E402
