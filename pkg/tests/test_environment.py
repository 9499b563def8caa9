"""Tests for the knowledge base, search environment, scripted agents and rollout worker."""

import os

import numpy as np
import pytest

from agents import AgentRegistry, BroadSearchAgent, EarlyAnswerAgent, OracleAgent, PolicyAgent
from cli.commands import EXIT_OK, main
from core.errors import ConfigError, StructuralError
from environment import (
    ActionSet, FEATURE_DIM, NUM_ACTIONS, STATE_DIM, KnowledgeBase, Question, SearchEnvironment,
    build_dataset, depth_counts, exact_match_reward, generate_dataset, load_questions, save_questions
)
from environment.search_env import GUESS_ANSWERS
from environment.trajectory import Trajectory
from policy import prior_parameters
from tools import SearchTool
from workflows.rollout import RolloutRequest, RolloutWorker, evaluate, summarize

GOLDEN_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures', 'dataset_seed0')
GOLDEN_FILES = ('kb.jsonl', 'questions.jsonl', 'eval_questions.jsonl')


@pytest.fixture(scope='module')
def dataset():
    return build_dataset(seed=3, train_questions=60, eval_questions=30, depth_mixture=[0.4, 0.4, 0.2])


def questions_of_depth(questions, depth):
    return [q for q in questions if q.depth == depth]


def play(agent, question, kb, max_turns=4, seed=0):
    worker = RolloutWorker(SearchEnvironment(kb, max_turns=max_turns))
    return worker.run_episode(agent, question, 0, np.zeros(FEATURE_DIM), seed)


class TestDatasetGeneration:
    """Test deterministic synthetic data."""

    def test_depth_counts(self):
        assert depth_counts(10, [0.4, 0.4, 0.2]) == [4, 4, 2]
        assert depth_counts(7, [0.5, 0.5, 0.0]) == [4, 3, 0]

    def test_same_seed_same_data(self):
        kb_a, questions_a = generate_dataset(5, [3, 3, 3])
        kb_b, questions_b = generate_dataset(5, [3, 3, 3])
        assert [q.to_dict() for q in questions_a] == [q.to_dict() for q in questions_b]
        assert kb_a.facts == kb_b.facts

    def test_chain_facts_lead_to_gold(self, dataset):
        for question in dataset.train + dataset.eval:
            value = question.head_entity
            for entity, relation in question.hop_entities:
                assert entity == value
                value = dataset.kb.lookup(entity, relation)
            assert value == question.gold_answer

    def test_broad_query_misleads_multi_hop(self, dataset):
        for question in questions_of_depth(dataset.train, 2) + questions_of_depth(dataset.train, 3):
            broad = dataset.kb.lookup(question.head_entity, question.hop_entities[-1][1])
            assert broad is not None
            assert broad != question.gold_answer

    def test_split_sizes_and_ids(self, dataset):
        assert len(dataset.train) == 60
        assert len(dataset.eval) == 30
        assert len(dataset.question_index()) == 90

    def test_question_text(self):
        _, questions = generate_dataset(0, [0, 1, 0])
        (e1, r1), (_, r2) = questions[0].hop_entities
        assert questions[0].text == f"What is the {r2} of the {r1} of {e1}?"

    def test_duplicate_fact_rejected(self):
        kb = KnowledgeBase()
        kb.add_fact('a', 'capital', 'b')
        with pytest.raises(StructuralError):
            kb.add_fact('a', 'capital', 'c')

    def test_persistence(self, dataset, tmp_path):
        dataset.kb.to_jsonl(str(tmp_path / 'kb.jsonl'))
        save_questions(dataset.eval, str(tmp_path / 'questions.jsonl'))
        assert KnowledgeBase.from_jsonl(str(tmp_path / 'kb.jsonl')).facts == dataset.kb.facts
        loaded = load_questions(str(tmp_path / 'questions.jsonl'))
        assert [q.to_dict() for q in loaded] == [q.to_dict() for q in dataset.eval]

    def test_seed_zero_matches_golden_fixture(self, tmp_path):
        output = str(tmp_path / 'seed0')
        assert main(['--log-level', 'WARNING', 'dataset', '--seed', '0', '--output', output]) == EXIT_OK
        for name in GOLDEN_FILES:
            with open(os.path.join(GOLDEN_DIR, name), 'rb') as f:
                expected = f.read()
            with open(os.path.join(output, name), 'rb') as f:
                assert f.read() == expected, name

    def test_golden_fixture_loads(self):
        kb = KnowledgeBase.from_jsonl(os.path.join(GOLDEN_DIR, 'kb.jsonl'))
        questions = load_questions(os.path.join(GOLDEN_DIR, 'questions.jsonl'))
        held_out = load_questions(os.path.join(GOLDEN_DIR, 'eval_questions.jsonl'))
        assert (len(questions), len(held_out)) == (1000, 200)
        assert [q.depth for q in questions + held_out].count(3) == 240
        for question in questions[:50]:
            value = question.head_entity
            for entity, relation in question.hop_entities:
                value = kb.lookup(entity, relation)
            assert value == question.gold_answer


class TestSearchTool:
    """Test the knowledge base lookup tool."""

    def test_hit_carries_distractor(self):
        kb = KnowledgeBase()
        kb.add_fact('a', 'capital', 'b')
        kb.add_fact('x', 'author', 'y', 'noise')
        result = SearchTool(kb).execute(entity='a', relation='capital')
        assert result['success']
        assert result['result'] == {'hit': True, 'value': 'b', 'distractor': ('x', 'author', 'y')}

    def test_miss(self):
        result = SearchTool(KnowledgeBase()).execute(entity='a', relation='capital')
        assert result['result']['hit'] is False

    def test_missing_parameter(self):
        result = SearchTool(KnowledgeBase()).execute(relation='capital')
        assert result['success'] is False
        assert 'entity' in result['error']


class TestScriptedAgents:
    """Test the environment against fixed strategies."""

    def test_oracle_solves_every_depth(self, dataset):
        for question in dataset.train:
            trajectory = play(OracleAgent(), question, dataset.kb)
            assert trajectory.reward == 1.0
            assert trajectory.tool_calls == question.depth

    def test_broad_search_only_solves_single_hop(self, dataset):
        for question in dataset.train:
            trajectory = play(BroadSearchAgent(), question, dataset.kb)
            assert trajectory.reward == (1.0 if question.depth == 1 else 0.0)

    def test_early_answer(self, dataset):
        for question in dataset.train:
            trajectory = play(EarlyAnswerAgent(), question, dataset.kb)
            assert trajectory.reward == (1.0 if question.depth == 1 else 0.0)

    def test_turn_limit_ends_without_answer(self, dataset):
        question = questions_of_depth(dataset.train, 3)[0]
        trajectory = play(OracleAgent(), question, dataset.kb, max_turns=2)
        assert trajectory.final_answer is None
        assert trajectory.reward == 0.0
        assert trajectory.turns_used == 2


class TestSearchEnvironment:
    """Test transitions, observations and rewards."""

    def test_search_appends_agent_and_observation_items(self, dataset):
        env = SearchEnvironment(dataset.kb)
        question = questions_of_depth(dataset.train, 2)[0]
        episode = env.reset(question, 0, np.zeros(FEATURE_DIM))
        observation = env.step(episode, env.actions.search(episode.next_slot))
        assert observation.startswith('<information>')
        assert [item.is_agent for item in episode.trajectory.items] == [True, False]
        assert episode.trajectory.items[1].action_taken is None
        assert episode.resolved == 1

    def test_state_features_track_progress(self, dataset):
        env = SearchEnvironment(dataset.kb, max_turns=4)
        question = questions_of_depth(dataset.train, 2)[0]
        episode = env.reset(question, 0, np.zeros(FEATURE_DIM))
        before = env.state_features(episode)
        assert before.shape == (STATE_DIM,)
        assert before[0] == 0.0 and before[1] == 0.0 and before[5] == 1.0
        assert list(before[7:]) == [0.0, 1.0, 0.0]
        env.step(episode, env.actions.search(1))
        after = env.state_features(episode)
        assert after[0] == pytest.approx(0.25)
        assert after[1] == pytest.approx(0.5)
        assert after[2] == 1.0
        assert list(after[7:]) == [1.0, 0.0, 0.0]
        env.step(episode, env.actions.search(0))
        assert list(env.state_features(episode)[7:]) == [0.0, 0.0, 0.0]

    def test_step_after_done_rejected(self, dataset):
        env = SearchEnvironment(dataset.kb)
        episode = env.reset(dataset.train[0], 0, np.zeros(FEATURE_DIM))
        env.step(episode, env.actions.guess)
        with pytest.raises(StructuralError):
            env.step(episode, env.actions.search(0))

    def test_unknown_action(self, dataset):
        env = SearchEnvironment(dataset.kb)
        episode = env.reset(dataset.train[0], 0, np.zeros(FEATURE_DIM))
        with pytest.raises(StructuralError):
            env.step(episode, 17)

    def test_exact_match_normalizes_case_and_space(self):
        question = Question(id=0, text='q', hop_entities=[('a', 'capital')], gold_answer='Entity_0001')
        trajectory = Trajectory(instruction_id=0, question_id=0, final_answer='  entity_0001 ')
        assert exact_match_reward(trajectory, question) == 1.0
        trajectory.final_answer = None
        assert exact_match_reward(trajectory, question) == 0.0

    def test_bad_turn_limit(self, dataset):
        with pytest.raises(StructuralError):
            SearchEnvironment(dataset.kb, max_turns=0)


class TestActionSet:
    """Test slot searches, memory answers and masking."""

    def test_layout(self):
        actions = ActionSet(max_depth=3, memory_slots=4)
        assert actions.size == 8 == NUM_ACTIONS
        assert [actions.search(k) for k in range(3)] == [0, 1, 2]
        assert [actions.answer(m) for m in range(4)] == [3, 4, 5, 6]
        assert actions.guess == 7
        assert [actions.name(a) for a in (0, 4, 7)] == ['SEARCH(0)', 'ANSWER(1)', 'ANSWER(guess)']
        assert actions.decode(5) == ('answer', 2)

    def test_layout_follows_memory_cap(self, dataset):
        env = SearchEnvironment(dataset.kb, memory_slots=6)
        assert env.num_actions == 10
        assert env.actions.guess == 9

    def test_out_of_range_ids(self):
        actions = ActionSet()
        with pytest.raises(StructuralError):
            actions.search(3)
        with pytest.raises(StructuralError):
            actions.answer(4)
        with pytest.raises(StructuralError):
            actions.decode(-1)
        with pytest.raises(StructuralError):
            ActionSet(memory_slots=0)

    def test_initial_mask(self, dataset):
        env = SearchEnvironment(dataset.kb)
        question = questions_of_depth(dataset.train, 2)[0]
        episode = env.reset(question, 0, np.zeros(FEATURE_DIM))
        assert list(env.action_mask(episode)) == [True, True, False, False, False, False, False, True]

    def test_mask_grows_with_memory(self, dataset):
        env = SearchEnvironment(dataset.kb)
        question = questions_of_depth(dataset.train, 3)[0]
        episode = env.reset(question, 0, np.zeros(FEATURE_DIM))
        env.step(episode, env.actions.search(2))
        mask = env.action_mask(episode)
        assert list(mask[:3]) == [True, True, True]
        assert list(mask[3:7]) == [True, True, False, False]
        env.step(episode, env.actions.search(1))
        assert env.action_mask(episode)[3:7].all()

    def test_masked_action_rejected(self, dataset):
        env = SearchEnvironment(dataset.kb)
        question = questions_of_depth(dataset.train, 1)[0]
        episode = env.reset(question, 0, np.zeros(FEATURE_DIM))
        with pytest.raises(StructuralError):
            env.step(episode, env.actions.search(1))
        with pytest.raises(StructuralError):
            env.step(episode, env.actions.answer(0))

    def test_agent_points_record_their_mask(self, dataset):
        env = SearchEnvironment(dataset.kb)
        question = questions_of_depth(dataset.train, 2)[0]
        episode = env.reset(question, 0, np.zeros(FEATURE_DIM))
        expected = env.action_mask(episode)
        env.step(episode, env.actions.search(1))
        agent, observation = episode.trajectory.items
        assert list(agent.action_mask) == list(expected)
        assert observation.action_mask is None

    def test_slot_zero_is_the_whole_question(self, dataset):
        env = SearchEnvironment(dataset.kb)
        question = questions_of_depth(dataset.train, 2)[0]
        episode = env.reset(question, 0, np.zeros(FEATURE_DIM))
        env.step(episode, env.actions.search(0))
        broad = dataset.kb.lookup(question.head_entity, question.hop_entities[-1][1])
        assert episode.resolved == 0
        assert episode.latest_hit_value == broad

    def test_wrong_slot_mid_chain_misses(self, dataset):
        env = SearchEnvironment(dataset.kb)
        question = questions_of_depth(dataset.train, 3)[0]
        episode = env.reset(question, 0, np.zeros(FEATURE_DIM))
        env.step(episode, env.actions.search(2))
        observation = env.step(episode, env.actions.search(2))
        assert observation == '<information> no result </information>'
        assert episode.resolved == 1
        assert episode.last_hit is False

    def test_answer_positions_count_back_from_newest(self, dataset):
        env = SearchEnvironment(dataset.kb)
        question = questions_of_depth(dataset.train, 1)[0]
        for position, expected in ((1, 1.0), (0, 0.0)):
            episode = env.reset(question, 0, np.zeros(FEATURE_DIM))
            env.step(episode, env.actions.search(0))
            hit, distractor = episode.memory
            assert hit == question.gold_answer
            assert distractor != hit
            env.step(episode, env.actions.answer(position))
            assert episode.trajectory.final_answer == episode.memory[-1 - position]
            assert episode.trajectory.reward == expected

    def test_guess_never_matches(self, dataset):
        env = SearchEnvironment(dataset.kb)
        episode = env.reset(dataset.train[0], 0, np.zeros(FEATURE_DIM))
        env.step(episode, env.actions.guess)
        assert episode.trajectory.final_answer in GUESS_ANSWERS
        assert episode.trajectory.reward == 0.0

    def test_mask_survives_serialization(self, dataset):
        env = SearchEnvironment(dataset.kb)
        episode = env.reset(dataset.train[0], 0, np.zeros(FEATURE_DIM))
        env.step(episode, env.actions.search(0))
        restored = Trajectory.from_dict(episode.trajectory.to_dict())
        assert list(restored.items[0].action_mask) == list(episode.trajectory.items[0].action_mask)
        assert restored.items[1].action_mask is None


class TestRolloutWorker:
    """Test seeded rollouts and evaluation summaries."""

    def test_thread_pool_matches_sequential(self, dataset):
        env = SearchEnvironment(dataset.kb)
        agent = PolicyAgent(prior_parameters(), which='current')
        requests = [RolloutRequest(q, 0, np.zeros(FEATURE_DIM), seed=i)
                    for i, q in enumerate(dataset.train[:20])]
        sequential = RolloutWorker(env).run_many(agent, requests)
        pooled = RolloutWorker(env, workers=4).run_many(agent, requests)
        assert [t.to_dict() for t in sequential] == [t.to_dict() for t in pooled]

    def test_policy_agent_respects_mask(self, dataset):
        worker = RolloutWorker(SearchEnvironment(dataset.kb))
        agent = PolicyAgent(prior_parameters(), which='current')
        for seed, question in enumerate(dataset.train):
            trajectory = worker.run_episode(agent, question, 0, np.zeros(FEATURE_DIM), seed)
            for point in trajectory.agent_points:
                assert point.action_mask[point.action_taken]

    def test_evaluate_oracle(self, dataset):
        worker = RolloutWorker(SearchEnvironment(dataset.kb))
        report = evaluate(worker, OracleAgent(), dataset.eval, 0, np.zeros(FEATURE_DIM))
        assert report.count == 30
        assert report.em_rate == 1.0

    def test_empty_summary(self):
        assert summarize([]).to_dict() == {'count': 0, 'em_rate': 0.0, 'mean_tool_calls': 0.0,
                                           'mean_turns': 0.0}


class TestAgentRegistry:
    """Test agent lookup by kind."""

    def test_known_kinds(self):
        registry = AgentRegistry()
        assert registry.available() == ['broad', 'early', 'oracle', 'policy']
        assert isinstance(registry.create('Oracle'), OracleAgent)
        assert registry.create('policy', prior_parameters()).greedy

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            AgentRegistry().create('random')

    def test_policy_needs_parameters(self):
        with pytest.raises(ConfigError):
            AgentRegistry().create('policy')
