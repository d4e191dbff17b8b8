"""
Synthetic scenarios
-------------------

A small, fully scripted problem for demonstrations and end-to-end checks:
whether a person is overweight depends on weight / height**2, which an
axis-aligned tree over the raw columns can only approximate with a
staircase. One of three knowledge documents explains the body mass index.
"""
import json
from pathlib import Path
from typing import Dict, List

import numpy as np

from .tabular import Dataset, FeatureMeta, write_csv

BMI_THRESHOLD = 27.0
BMI_QUERY = "body mass index from weight and height"
BMI_DESCRIPTION = (
    "Health screening records. weight is body weight in kilograms and height is "
    "body height in metres. The target overweight is 1 for overweight people."
)
BMI_GOAL = "detect overweight people"

BMI_DOCUMENTS = {
    "bmi": """# Body mass index

The body mass index (BMI) relates body weight to height. It is the weight in
kilograms divided by the square of the height in metres. Adults with a BMI
above 25 are usually classed as overweight and above 30 as obese.

```
Label: bmi
Calculation: weight / (height * height)
Reasoning: BMI normalises weight by body size, which is what the overweight threshold is defined on.
```
""",
    "hydration": """# Hydration

Daily water needs grow with body weight; a common rule of thumb is about
35 millilitres of water per kilogram.

```
Label: water_need
Calculation: weight * 0.035
Reasoning: Water need scales with weight.
```
""",
    "posture": """# Posture

Good posture keeps the spine aligned and reduces back pain. Standing height
varies by up to two centimetres over the course of a day.
""",
}

BMI_PROPOSAL = """The document defines BMI as weight over squared height, and the target is defined
by a BMI threshold, so this feature should separate the classes directly.

```
Label: bmi
Calculation: weight / (height * height)
Reasoning: BMI normalises weight by body size; overweight is defined by a BMI threshold.
```"""

USELESS_PROPOSALS = [
    """Scaling weight changes nothing a tree can use, but it is what the document offers.

```
Label: water_need
Calculation: weight * 0.035
Reasoning: Water need scales with weight.
```""",
    """The document says nothing about the target.

```
Label: height_change
Calculation: height - height
Reasoning: Daily height variation is not recorded, so this is constant.
```""",
    """```
Label: spine
Calculation: spine_angle / height
Reasoning: Posture is measured as a spine angle.
```""",
]

BMI_DESCRIPTION_UPDATE = (
    BMI_DESCRIPTION + " The feature bmi is weight divided by the squared height, "
    "the body mass index."
)


def bmi_table(n_rows: int = 400, seed: int = 7) -> Dataset:
    """weight ~ U(45, 110) kg, height ~ U(1.50, 1.95) m, overweight iff BMI > 27."""
    rng = np.random.default_rng(seed)
    weight = rng.uniform(45, 110, n_rows)
    height = rng.uniform(1.50, 1.95, n_rows)
    target = (weight / height**2 > BMI_THRESHOLD).astype(np.intp)
    return Dataset(
        [(FeatureMeta("weight"), weight), (FeatureMeta("height"), height)],
        target,
        ("0", "1"),
        BMI_DESCRIPTION,
        "overweight",
    )


def bmi_replay(patience: int, top_k: int = 3, n_docs: int = 3) -> List[str]:
    """Replay records: one adopted BMI proposal, then `patience` useless iterations.

    Every iteration asks for one query and one proposal per retrieved
    document; adoption adds one description update and removes the source
    document from later retrievals.
    """
    first = [BMI_QUERY, BMI_PROPOSAL]
    first += [USELESS_PROPOSALS[i % 2] for i in range(min(top_k, n_docs) - 1)]
    first.append(BMI_DESCRIPTION_UPDATE)
    records = list(first)
    per_iteration = min(top_k, n_docs - 1)
    for i in range(patience):
        records.append(f"{BMI_QUERY} {i + 1}")
        records += [USELESS_PROPOSALS[(i + j) % len(USELESS_PROPOSALS)] for j in range(per_iteration)]
    return records


def useless_replay(iterations: int, top_k: int = 3, n_docs: int = 3) -> List[str]:
    """Replay records in which no proposal can improve a decision tree."""
    records = []
    for i in range(iterations):
        records.append(f"hydration and posture {i}")
        records += [USELESS_PROPOSALS[(i + j) % len(USELESS_PROPOSALS)] for j in range(min(top_k, n_docs))]
    return records


def bmi_config(patience: int = 2, **overrides) -> Dict:
    config = {
        "max_iterations": 10,
        "patience": patience,
        "top_k": 3,
        "metric": "accuracy",
        "cv_folds": 5,
        "seed": 0,
        "task_goal": BMI_GOAL,
        "test_fraction": 0.2,
        "learner": "decision_tree",
        "max_depth": 3,
        "min_leaf": 2,
    }
    config.update(overrides)
    return config


def write_replay(records: List[str], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n---\n".join(records) + "\n")


def write_bmi_scenario(directory, n_rows: int = 400, seed: int = 7, patience: int = 2) -> Dict[str, Path]:
    """Write data.csv, description.txt, corpus/, replay.txt and config.json.

    Returns the written paths by name.
    """
    directory = Path(directory)
    corpus = directory / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    paths = {
        "data": directory / "data.csv",
        "description": directory / "description.txt",
        "corpus": corpus,
        "replay": directory / "replay.txt",
        "config": directory / "config.json",
    }
    write_csv(bmi_table(n_rows, seed), paths["data"])
    paths["description"].write_text(BMI_DESCRIPTION + "\n", encoding="utf-8")
    for doc_id, body in BMI_DOCUMENTS.items():
        (corpus / f"{doc_id}.md").write_text(body, encoding="utf-8")
    write_replay(bmi_replay(patience), paths["replay"])
    with open(paths["config"], "w", encoding="utf-8", newline="\n") as f:
        json.dump(bmi_config(patience), f, indent=2)
        f.write("\n")
    return paths
