from .output import emit_outputs, read_trials
from .run import Aggregate, TrialResult, run_experiment, run_trial
from .scenario import ALIGNMENT_PRESETS, Scenario, scaled_counts

__all__ = ["ALIGNMENT_PRESETS", "Aggregate", "Scenario", "TrialResult", "emit_outputs", "read_trials",
           "run_experiment", "run_trial", "scaled_counts"]
