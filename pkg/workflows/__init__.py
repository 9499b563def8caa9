# The orchestrator is imported from workflows.orchestrator directly: proposer depends on
# workflows.rollout, so importing it here would be circular.
from .rollout import RolloutRequest, RolloutWorker, EvaluationReport, summarize, evaluate
from .run_state import RunState, RunCounters, load_run_config
