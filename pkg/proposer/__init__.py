from .candidate_parser import parse_candidates
from .prompt_builder import PromptBuilder, PromptContext, TEXT_KINDS, score_0_100
from .mutation import DraftCandidate, mutation_propose, drafts_from_texts
from .verifier import VerificationResult, verify_candidates, verification_seed, proxy_score
from .evolution import (
    ProposalBatch, RoundRecord, EvolutionReport, TextProposer, initial_population, evolve_population
)
