"""End-to-end behaviour of the engine on scripted scenarios."""
import pytest
import numpy as np

from ragfpy import scenarios
from ragfpy.engine import ACCEPTED, PATIENCE, REJECTED, EngineConfig, FeatureGenerator, run
from ragfpy.learners import LearnerConfig, LearnerKind
from ragfpy.oracle import Gateway, ReplayTransport


def test_bmi_accuracy_and_improvement(bmi_f, kb_f, engine_config_f):
    result = run(engine_config_f, bmi_f, kb_f, Gateway(ReplayTransport(scenarios.bmi_replay(2))))
    assert result.final_test.accuracy >= 0.97
    assert result.final_test.accuracy - result.base_test.accuracy >= 0.03
    assert result.best_score >= 0.97
    assert "bmi" in result.dataset


@pytest.mark.parametrize("patience", [1, 2, 3])
def test_patience_stops_after_k_rejections(bmi_f, kb_f, tree_config_f, patience):
    config = EngineConfig(
        max_iterations=10,
        patience=patience,
        top_k=3,
        learner=tree_config_f,
        task_goal=scenarios.BMI_GOAL,
    )
    gateway = Gateway(ReplayTransport(scenarios.bmi_replay(patience)))
    result = run(config, bmi_f, kb_f, gateway)
    assert result.stop_reason == PATIENCE
    assert len(result.iterations) == 1 + patience
    assert [r.decision for r in result.iterations[1:]] == [REJECTED] * patience
    assert gateway.transport.remaining == 0


def test_identical_runs_give_identical_results(small_bmi_f, kb_f, engine_config_f):
    results = [run(engine_config_f, small_bmi_f, kb_f, Gateway()) for _ in range(2)]
    a, b = results
    assert a.dataset == b.dataset
    assert a.base_score == b.base_score and a.best_score == b.best_score
    assert [r.query for r in a.iterations] == [r.query for r in b.iterations]
    assert a.final_test == b.final_test


EXTRA_PROPOSALS = [
    "```\nLabel: ratio\nCalculation: weight / height\nReasoning: weight per metre.\n```",
    "```\nLabel: heavy\nCalculation: weight > 80\nReasoning: heavy people.\n```",
    "```\nLabel: tall\nCalculation: if height > 1.8 then 1 else 0\nReasoning: tall people.\n```",
    "```\nLabel: mass\nCalculation: log(weight)\nReasoning: log scale.\n```",
]
RECORD_POOL = [scenarios.BMI_PROPOSAL] + scenarios.USELESS_PROPOSALS + EXTRA_PROPOSALS


class _StateRecorder(FeatureGenerator):
    """remembers the dataset each iteration starts from"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.states = []

    def _score(self, d, candidates, folds):
        self.states.append(d)
        return super()._score(d, candidates, folds)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_adoption_is_strictly_improving(kb_f, seed):
    rng = np.random.default_rng(seed)
    d0 = scenarios.bmi_table(n_rows=int(rng.integers(60, 200)), seed=seed)
    kind = LearnerKind.DECISION_TREE if seed % 2 else LearnerKind.RANDOM_FOREST
    config = EngineConfig(
        max_iterations=4,
        patience=int(rng.integers(1, 4)),
        top_k=int(rng.integers(1, 4)),
        learner=LearnerConfig(kind=kind, max_depth=3, n_trees=10, seed=seed),
        cv_folds=3,
        seed=seed,
    )
    records = [RECORD_POOL[i] for i in rng.integers(0, len(RECORD_POOL), size=25)]
    generator = _StateRecorder(config, kb_f, Gateway(ReplayTransport(records)))
    result = generator.run(d0)

    best = result.base_score
    n_features = len(d0.feature_names)
    states = generator.states + [result.dataset]
    assert states[0] is d0
    for i, record in enumerate(result.iterations):
        before, after = states[i], states[i + 1]
        if record.decision == ACCEPTED:
            assert record.chosen.score > best
            best = record.chosen.score
            n_features += 1
        else:
            assert record.chosen is None or record.chosen.score <= best
            # a rejected iteration leaves the dataset and its description untouched
            assert after is before
            assert record.description_after == before.description
        assert record.best_score == best
        assert len(after.feature_names) == n_features
    assert result.best_score == best
    assert [m.name for m in result.dataset.schema[: len(d0.feature_names)]] == list(d0.feature_names)
