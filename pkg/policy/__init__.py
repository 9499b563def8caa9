from .softmax_policy import (
    PolicyParams, action_logits, action_probabilities, action_log_probabilities, masked_log_ratio,
    prior_parameters
)
from .grpo import (
    GroupRollout, compute_advantages, importance_ratio, importance_ratio_details, kl_penalty,
    surrogate_loss, batch_loss, apply_update
)
