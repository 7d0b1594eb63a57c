"""slaforge: design and stress-test SLAs for citywide inspection queues."""

from .metrics import (
    MetricsConfig,
    PolicyMetrics,
    compute_losses,
    empirical_sla,
    group_costs,
    inspection_fractions,
)
from .model import (
    ArrivalTrace,
    BoroughBudgetPolicy,
    CapacityTrace,
    CityBudgetPolicy,
    ProblemInstance,
    StylizedSolution,
    borough_policy_from_vector,
    build_instance,
    city_policy_from_vector,
)
from .search import (
    FrontEntry,
    OutOfSampleReport,
    ParetoFront,
    SearchConfig,
    evaluate_policy_batch,
    hypervolume,
    out_of_sample,
    pareto_filter,
    policy_dimension,
    run_search,
)
from .simulator import (
    FATE_BACKLOG,
    FATE_DROPPED,
    FATE_INSPECTED,
    SimulationConfig,
    SimulationOutcome,
    backend_name,
    compiled_available,
    derive_city_inspection_fractions,
    generate_synthetic_trace,
    simulate_borough_policy,
    simulate_city_policy,
)
from .stylized import (
    WeightedObjectiveConfig,
    borough_cost_stylized,
    price_of_efficiency,
    price_of_equity,
    solve_extreme_efficiency,
    solve_extreme_equity,
    solve_weighted,
    verify_solution,
)

__version__ = "0.1.0"

__all__ = [
    "ArrivalTrace",
    "BoroughBudgetPolicy",
    "CapacityTrace",
    "CityBudgetPolicy",
    "FATE_BACKLOG",
    "FATE_DROPPED",
    "FATE_INSPECTED",
    "FrontEntry",
    "MetricsConfig",
    "OutOfSampleReport",
    "ParetoFront",
    "PolicyMetrics",
    "ProblemInstance",
    "SearchConfig",
    "SimulationConfig",
    "SimulationOutcome",
    "StylizedSolution",
    "WeightedObjectiveConfig",
    "backend_name",
    "borough_cost_stylized",
    "borough_policy_from_vector",
    "build_instance",
    "city_policy_from_vector",
    "compiled_available",
    "compute_losses",
    "derive_city_inspection_fractions",
    "empirical_sla",
    "evaluate_policy_batch",
    "generate_synthetic_trace",
    "group_costs",
    "hypervolume",
    "inspection_fractions",
    "out_of_sample",
    "pareto_filter",
    "policy_dimension",
    "price_of_efficiency",
    "price_of_equity",
    "run_search",
    "simulate_borough_policy",
    "simulate_city_policy",
    "solve_extreme_efficiency",
    "solve_extreme_equity",
    "solve_weighted",
    "verify_solution",
    "__version__",
]
