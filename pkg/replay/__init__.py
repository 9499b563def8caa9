from .replay_buffer import ReplayRecord, ReplayBuffer
