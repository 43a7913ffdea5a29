"""Arrival-time-designed threshold policies for the order-selection prophet
inequality: curves, schedules, constants, Monte Carlo engine, verification."""

from .constants import Constants, get_constants, hk_curves, solve_alpha, solve_gamma_iid, y_function
from .corpus import CORPUS_LABELS, corpus_path, load_corpus, load_corpus_instance
from .curves import (
    BisectionError,
    CurveSet,
    InverseCurve,
    build_curveset,
    build_inverse_curve,
    curves_at,
    eval_tau,
)
from .distributions import (
    Instance,
    InstanceError,
    ValueDist,
    cdf_eval,
    load_instance,
    parse_instance,
    quantile_eval,
    support_bounds,
)
from .engine import (
    InfiniteProphetError,
    PROBE_TIMES,
    SimReport,
    backward_induction,
    brute_force_order,
    default_gamma,
    estimate,
    max_exceedance,
    prophet_value,
    run_alg_trial,
    simulate_main_events,
    single_threshold_baseline,
    uniform_arrival_baseline,
)
from .schedule import (
    ArrivalSchedule,
    ScheduleValidityError,
    arrival_from_uniform,
    build_schedule,
    designate_item_one,
    g_values,
    sample_arrival,
    schedule_mass,
)
from .verify import (
    CheckReport,
    check_alpha_uniqueness,
    check_claim_gp,
    check_claim_iid,
    check_hk_crossing,
    check_identities,
    check_lemma_integral,
    check_mathfacts,
    check_simulation_lemmas,
    check_validity,
    run_all,
)

__version__ = "0.1.0"

__all__ = [
    "ArrivalSchedule",
    "BisectionError",
    "CORPUS_LABELS",
    "CheckReport",
    "Constants",
    "CurveSet",
    "InfiniteProphetError",
    "Instance",
    "InstanceError",
    "InverseCurve",
    "PROBE_TIMES",
    "ScheduleValidityError",
    "SimReport",
    "ValueDist",
    "arrival_from_uniform",
    "backward_induction",
    "brute_force_order",
    "build_curveset",
    "build_inverse_curve",
    "build_schedule",
    "cdf_eval",
    "check_alpha_uniqueness",
    "check_claim_gp",
    "check_claim_iid",
    "check_hk_crossing",
    "check_identities",
    "check_lemma_integral",
    "check_mathfacts",
    "check_simulation_lemmas",
    "check_validity",
    "corpus_path",
    "curves_at",
    "default_gamma",
    "designate_item_one",
    "estimate",
    "eval_tau",
    "g_values",
    "get_constants",
    "hk_curves",
    "load_corpus",
    "load_corpus_instance",
    "load_instance",
    "max_exceedance",
    "parse_instance",
    "prophet_value",
    "quantile_eval",
    "run_alg_trial",
    "run_all",
    "sample_arrival",
    "schedule_mass",
    "simulate_main_events",
    "single_threshold_baseline",
    "solve_alpha",
    "solve_gamma_iid",
    "support_bounds",
    "uniform_arrival_baseline",
    "y_function",
    "__version__",
]
