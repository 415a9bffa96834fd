"""Solvers for the simple plant location problem with customer preference
rankings: exact branch and bound, greedy bounds, Lagrangean and
semi-Lagrangean duals, and the accelerated dual ascent pipeline."""

from .ada import AdaConfig, AdaResult, PRESETS, ada, preset_config, vfh
from .exact import (
    ExactResult,
    InfeasibleError,
    ProblemSpec,
    branch_and_bound,
    brute_force,
    to_mps,
)
from .instance import (
    CostLadder,
    GeneratorConfig,
    Instance,
    InstanceFormatError,
    PreferenceSets,
    cost_ladder,
    default_epsilon,
    facility_sort_keys,
    generate_instance,
    parse_instance,
    parse_orlib,
    write_instance,
)
from .lagrange import (
    LagrangeMultipliers,
    LrSolution,
    SgConfig,
    SgResult,
    cumulative_lambda,
    default_start,
    lr_subgradient,
    solve_lr,
    subgradient_method,
)
from .report import (
    ReportRow,
    RunReport,
    ada_result_json,
    ada_table_row,
    config_hash,
    gap_fields,
    trace_to_csv,
)
from .semilagrange import (
    DAResult,
    DaConfig,
    DualAscent,
    GammaState,
    SlrSolution,
    ascend,
    dual_ascent,
    place_gamma,
    prefix_audit_rows,
    slr_subgradient,
    solve_slr,
)
from .solution import (
    Solution,
    UNASSIGNED,
    Violation,
    assign_most_preferred,
    check_feasible,
    heuristic_hc,
    heuristic_hs,
    objective,
    solution_from_json,
    solution_to_json,
)

__version__ = "0.1.0"
