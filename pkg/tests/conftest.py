import pytest
import numpy as np

from ragfpy import scenarios
from ragfpy.engine import EngineConfig
from ragfpy.knowledge import HashEmbedder, index
from ragfpy.learners import LearnerConfig, LearnerKind
from ragfpy.tabular import Dataset, FeatureMeta

"""Engine runs over many randomized scenarios take a while. They are marked slow
and skipped unless --slow is passed; the default suite stays well under two minutes."""


def pytest_addoption(parser):
    parser.addoption(
        "--slow",
        action="store_true",
        default=False,
        help="Pass to run slow tests (randomized engine scenarios, random forests).",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: mark test as slow to run")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--slow"):
        return
    skip_slow = pytest.mark.skip(reason="--slow flag not passed, skipping slow tests")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


##########################################################
######              fixtures                   ###########
##########################################################


def make_dataset(columns: dict, target, description="", classes=None) -> Dataset:
    target = np.asarray(target, dtype=np.intp)
    if classes is None:
        classes = tuple(str(c) for c in range(int(target.max()) + 1))
    cols = [(FeatureMeta(name), np.asarray(v, dtype=float)) for name, v in columns.items()]
    return Dataset(cols, target, classes, description)


@pytest.fixture
def make_dataset_f():
    """build a numeric dataset from a {name: values} dict"""
    return make_dataset


@pytest.fixture
def bmi_f():
    return scenarios.bmi_table()


@pytest.fixture
def small_bmi_f():
    return scenarios.bmi_table(n_rows=150, seed=3)


@pytest.fixture
def corpus_dir_f(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for doc_id, body in scenarios.BMI_DOCUMENTS.items():
        (corpus / f"{doc_id}.md").write_text(body, encoding="utf-8")
    return corpus


@pytest.fixture
def kb_f(corpus_dir_f):
    return index(corpus_dir_f, HashEmbedder())


@pytest.fixture
def tree_config_f():
    return LearnerConfig(kind=LearnerKind.DECISION_TREE, max_depth=3, min_leaf=2)


@pytest.fixture
def engine_config_f(tree_config_f):
    return EngineConfig(
        max_iterations=10,
        patience=2,
        top_k=3,
        learner=tree_config_f,
        cv_folds=5,
        seed=0,
        task_goal=scenarios.BMI_GOAL,
    )


@pytest.fixture
def scenario_dir_f(tmp_path):
    paths = scenarios.write_bmi_scenario(tmp_path / "scenario")
    return paths
