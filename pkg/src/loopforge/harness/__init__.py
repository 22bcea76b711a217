from .io import EPISODE_COLUMNS, read_episodes, read_response
from .runner import run_scenario
from .scenario import (
    DriftSpec,
    DriftState,
    Scenario,
    drift_state,
    drifted_plant,
    load_scenario,
    make_target,
    parse_scenario,
    run_experiment,
    seed_streams,
)
