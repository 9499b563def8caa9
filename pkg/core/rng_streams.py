"""
Random streams
Independent numpy generators for sampling, rollout, proposer and verification, plus
stateless per-trajectory seeds so parallel rollouts stay reproducible
"""

from typing import Dict, Any

import numpy as np

STREAM_NAMES = ('sampling', 'rollout', 'proposer', 'verification')

# Tags keep derived seeds of different purposes apart
ROLLOUT_TAG = 1
VERIFY_TAG = 2
EVAL_TAG = 3
WARMUP_TAG = 4


def derive_seed(*keys: int) -> int:
    """Deterministic 64-bit seed from a tuple of non-negative integers"""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


class RngStreams:
    """Named numpy Generators spawned from a single run seed"""

    def __init__(self, seed: int):
        self.seed = seed
        children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
        self._streams: Dict[str, np.random.Generator] = {
            name: np.random.Generator(np.random.PCG64(child))
            for name, child in zip(STREAM_NAMES, children)
        }

    @property
    def sampling(self) -> np.random.Generator:
        return self._streams['sampling']

    @property
    def rollout(self) -> np.random.Generator:
        return self._streams['rollout']

    @property
    def proposer(self) -> np.random.Generator:
        return self._streams['proposer']

    @property
    def verification(self) -> np.random.Generator:
        return self._streams['verification']

    def state_dict(self) -> Dict[str, Any]:
        """JSON-serializable bit generator states"""
        return {
            'seed': self.seed,
            'streams': {name: gen.bit_generator.state for name, gen in self._streams.items()},
        }

    def load_state_dict(self, state: Dict[str, Any]):
        self.seed = state['seed']
        for name, gen_state in state['streams'].items():
            self._streams[name].bit_generator.state = gen_state

    @classmethod
    def from_state_dict(cls, state: Dict[str, Any]) -> 'RngStreams':
        streams = cls(state['seed'])
        streams.load_state_dict(state)
        return streams
