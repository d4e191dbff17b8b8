"""
Prompt templates for the three gateway calls.

The wording is a reconstruction; only its content is contractual: a
proposal prompt always carries the document body, every column name, the
formula grammar, and the Label / Calculation / Reasoning answer format.
"""
from typing import Sequence

from ..tabular import FeatureMeta

SYSTEM_PROMPT = (
    "You are a data scientist who engineers features for tabular classification. "
    "You ground every suggestion in the domain knowledge you are given."
)

FORMULA_GRAMMAR = """\
Formulas use this grammar:
  arithmetic    a + b, a - b, a * b, a / b, -a, parentheses
  functions     log(x), exp(x), sqrt(x), abs(x), min(x, y, ...), max(x, y, ...)
  comparisons   <, <=, >, >=, ==, !=   (give 1 when true, 0 otherwise)
  logic         and, or
  conditionals  if <condition> then <value> else <value>
Column names that are not plain identifiers must be written in back-quotes,
for example `Land Area (Km2)`. Every formula must use at least one column."""

ANSWER_FORMAT = """\
First think step by step about which relationship in the document could help
the task. Then answer with exactly one fenced block of this form:

```
Label: <name of the new feature>
Calculation: <formula>
Reasoning: <one or two sentences>
```"""

QUERY_TEMPLATE = """\
Task goal: {task_goal}

Dataset description:
{description}

Columns: {columns}

Write one search query (a single line, no quotes) that would retrieve domain
knowledge useful for creating a new feature for this task."""

PROPOSAL_TEMPLATE = """\
Task goal: {task_goal}

Dataset description:
{description}

Columns: {columns}

Domain document "{title}" ({doc_id}):
<<<
{body}
>>>

Propose one new feature computed from the existing columns that the
document suggests.

{grammar}

{answer_format}"""

DESCRIPTION_TEMPLATE = """\
Dataset description:
{description}

A new feature was added to this dataset:
Label: {label}
Calculation: {formula}
Reasoning: {reasoning}

Rewrite the dataset description so that it also describes the new feature.
Mention the feature by its label. Answer with the new description only."""

FALLBACK_QUERY = "{goal}features derived from {columns}"
FALLBACK_DESCRIPTION = "Newly added feature: {label} = {formula}. {reasoning}"


def column_list(schema: Sequence[FeatureMeta]) -> str:
    return ", ".join(f"{m.name} ({m.kind.value})" for m in schema)


def query_prompt(description: str, schema: Sequence[FeatureMeta], task_goal: str) -> str:
    return QUERY_TEMPLATE.format(
        task_goal=task_goal or "(not given)",
        description=description or "(no description)",
        columns=column_list(schema),
    )


def proposal_prompt(doc, schema: Sequence[FeatureMeta], description: str, task_goal: str = "") -> str:
    return PROPOSAL_TEMPLATE.format(
        task_goal=task_goal or "(not given)",
        description=description or "(no description)",
        columns=column_list(schema),
        title=doc.title,
        doc_id=doc.id,
        body=doc.body,
        grammar=FORMULA_GRAMMAR,
        answer_format=ANSWER_FORMAT,
    )


def description_prompt(description: str, adopted) -> str:
    return DESCRIPTION_TEMPLATE.format(
        description=description or "(no description)",
        label=adopted.label,
        formula=adopted.formula,
        reasoning=adopted.reasoning,
    )


def fallback_query(schema: Sequence[FeatureMeta], task_goal: str) -> str:
    goal = f"{task_goal.strip()}: " if task_goal and task_goal.strip() else ""
    return FALLBACK_QUERY.format(goal=goal, columns=", ".join(m.name for m in schema))


def fallback_description(description: str, adopted) -> str:
    sentence = FALLBACK_DESCRIPTION.format(
        label=adopted.label, formula=adopted.formula, reasoning=adopted.reasoning
    ).rstrip()
    if not description:
        return sentence
    sep = "" if description.endswith(("\n", " ")) else " "
    return f"{description}{sep}{sentence}"
