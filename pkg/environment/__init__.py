from .knowledge_base import (
    KnowledgeBase, Question, Dataset, generate_dataset, build_dataset, depth_counts,
    save_questions, load_questions
)
from .trajectory import DecisionPoint, Trajectory
from .instruction_features import (
    FEATURE_DIM, NUM_FLAGS, NUM_KNOBS, LEXICON, instruction_features_from_text, flags_from_text,
    splice_flags
)
from .search_env import (
    ActionSet, MAX_DEPTH, MEMORY_SLOTS, NUM_ACTIONS, STATE_DIM, Episode, SearchEnvironment,
    exact_match_reward
)
