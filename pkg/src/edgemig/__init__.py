"""Planning, orchestration and simulation for stateful edge migrations.

The package splits into a worst-case cost model (:mod:`edgemig.model`),
workload profiling and parameter calibration (:mod:`edgemig.profiler`),
the orchestration decision logic (:mod:`edgemig.orchestrator`), the
protocol state machines (:mod:`edgemig.agents`), a deterministic
discrete-event simulator (:mod:`edgemig.simnet`), scenario file handling
(:mod:`edgemig.scenario`) and a command-line front end
(:mod:`edgemig.cli`).
"""

from .agents import (
    FlowTable,
    ScheduledStep,
    predicted_kpis,
    stopcopy_schedule,
    update_flow,
)
from .errors import (
    CalibrationError,
    DomainError,
    IncompleteMetricsError,
    MissingFlowError,
    ScenarioError,
)
from .model import (
    BYTES_PER_S_PER_MBPS,
    DEFAULT_ITERATION_CAP,
    DEFAULT_PAGE_SIZE,
    Kpis,
    ModelParams,
    MsProfile,
    StrategyChoice,
    StrategyKind,
    cold_kpis,
    frame_loss,
    max_iterations,
    min_bandwidth,
    precopy_kpis,
    strategy_kpis,
)
from .orchestrator import (
    AgentReport,
    BandwidthDistribution,
    MetricsView,
    MigrationConfig,
    MigrationTask,
    Objective,
    StrategyDistribution,
    aggregate,
    design,
    strategy_distribution,
)
from .profiler import (
    CalibrationFit,
    CalibrationRun,
    DirtyRateEstimate,
    DirtySample,
    SyntheticWorkload,
    calibration_fit,
    estimate_dirty_rate,
    synthetic_dirty_trace,
)
from .scenario import (
    Scenario,
    SweepSpec,
    load_scenario,
    parse_scenario,
    save_scenario,
    scenario_to_dict,
)
from .simnet import (
    DelayRule,
    DropRule,
    MigrationOutcome,
    dirty_set_size,
    plan_from_scenario,
    run_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "AgentReport",
    "BandwidthDistribution",
    "BYTES_PER_S_PER_MBPS",
    "CalibrationError",
    "CalibrationFit",
    "CalibrationRun",
    "DEFAULT_ITERATION_CAP",
    "DEFAULT_PAGE_SIZE",
    "DelayRule",
    "DirtyRateEstimate",
    "DirtySample",
    "DomainError",
    "DropRule",
    "FlowTable",
    "IncompleteMetricsError",
    "Kpis",
    "MetricsView",
    "MigrationConfig",
    "MigrationOutcome",
    "MigrationTask",
    "MissingFlowError",
    "ModelParams",
    "MsProfile",
    "Objective",
    "Scenario",
    "ScenarioError",
    "ScheduledStep",
    "StrategyChoice",
    "StrategyDistribution",
    "StrategyKind",
    "SweepSpec",
    "SyntheticWorkload",
    "aggregate",
    "calibration_fit",
    "cold_kpis",
    "design",
    "dirty_set_size",
    "estimate_dirty_rate",
    "frame_loss",
    "load_scenario",
    "max_iterations",
    "min_bandwidth",
    "parse_scenario",
    "plan_from_scenario",
    "precopy_kpis",
    "predicted_kpis",
    "run_scenario",
    "save_scenario",
    "scenario_to_dict",
    "stopcopy_schedule",
    "strategy_distribution",
    "strategy_kpis",
    "synthetic_dirty_trace",
    "update_flow",
]
