"""Gridworld state-space coverage testing with demonstration-seeded RRT.

A deterministic minigrid-style engine, reachable-state ground truth with an
exhaustive oracle, a goalless RRT explorer whose action sampler can be
uniform, hand-weighted, or a behavior clone's smoothed prediction, and an
experiment harness that reproduces coverage-saturation studies.
"""

from .world import (
    Action,
    AgentState,
    GameState,
    StepOutcome,
    SteppedAfterDone,
    observe,
    render_grid,
    parse_grid_render,
    step,
)
from .templates import (
    EnvInstance,
    EnvTemplate,
    InvalidTemplate,
    UnknownTemplate,
    catalog,
    get_template,
    instantiate,
)
from .statespace import (
    CapExceeded,
    CoverageCurve,
    CoverageTracker,
    brute_force_reachable,
    config_hash,
    ground_truth_cells,
    map_cell,
)
from .clone import (
    PolicyModel,
    TrainConfig,
    Trajectory,
    load_model,
    load_trajectory,
    predict,
    replay_verify,
    save_model,
    save_trajectory,
    train,
)
from .rrt import (
    ClonePriorSampler,
    DEFAULT_WEIGHTS,
    ExplorerConfig,
    RrtTree,
    TargetConfig,
    UniformSampler,
    WeightedSampler,
    alpha_at,
    ca_rollout,
    run,
    sample_target,
    seed_from_trajectory,
    smoothed_prior,
)
from .harness import (
    ExperimentResult,
    MethodSpec,
    compare,
    percentile_bands,
    run_experiment,
    saturation_iteration,
)

__version__ = "0.1.0"
