"""Lock behavioral analog circuit models with key-gated bias grids and break
them with oracle-guided attacks: a genetic algorithm that needs only the
locked netlist and measured responses, and an equation-based enumeration
baseline that additionally needs the circuit specification."""

__version__ = "0.1.0"

from galock.circuits import (
    CircuitModel,
    CircuitSpec,
    build_benchmark,
    load_benchmark,
    simulate,
    simulate_pll_metrics,
    simulate_receiver,
    simulate_twg,
)
from galock.curves import ResponseCurve, SamplingGrid, relative_distance
from galock.ga import (
    Chromosome,
    FitnessFunction,
    GAConfig,
    age_fitness_pareto_survival,
    crossover_single_point,
    evaluate_fitness,
    mutate,
    roulette_select,
    run_ga,
)
from galock.harness import (
    ExperimentReport,
    OracleBundle,
    compare_attacks,
    key_census,
    make_oracle,
    run_case1,
    run_case2_ga,
    run_receiver_attack,
    two_pass,
)
from galock.locking import (
    Key,
    LockGrid,
    LockedNetlist,
    effective_width,
    locked_simulate,
    make_pb_lock,
    make_smt_lock,
)

__all__ = [
    "CircuitModel",
    "CircuitSpec",
    "Chromosome",
    "ExperimentReport",
    "FitnessFunction",
    "GAConfig",
    "Key",
    "LockGrid",
    "LockedNetlist",
    "OracleBundle",
    "ResponseCurve",
    "SamplingGrid",
    "age_fitness_pareto_survival",
    "build_benchmark",
    "compare_attacks",
    "crossover_single_point",
    "effective_width",
    "evaluate_fitness",
    "key_census",
    "load_benchmark",
    "locked_simulate",
    "make_oracle",
    "make_pb_lock",
    "make_smt_lock",
    "mutate",
    "relative_distance",
    "roulette_select",
    "run_ga",
    "run_case1",
    "run_case2_ga",
    "run_receiver_attack",
    "simulate",
    "simulate_pll_metrics",
    "simulate_receiver",
    "simulate_twg",
    "two_pass",
]
