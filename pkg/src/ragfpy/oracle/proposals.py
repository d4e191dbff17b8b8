"""Extraction and validation of Label / Calculation / Reasoning proposals."""
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..errors import FormulaError, MalformedProposal
from ..fexpr import FeatureExpr, OperationKind, classify, parse

_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_FIELD_RE = re.compile(r"^\s*(label|calculation|reasoning)\s*:\s*(.*)$", re.IGNORECASE)


@dataclass(frozen=True)
class CandidateProposal:
    """One generated-feature suggestion, already validated against a schema.

    Parameters
    ----------
    label : str
        name of the new column
    formula : str
        the formula text as proposed
    reasoning : str
        the proposal's stated reasoning, kept verbatim
    source_doc : str
        id of the document the proposal was grounded on
    kind : OperationKind
        scaling, transformation or judgment
    thinking : str
        free text preceding the fenced answer block
    """

    label: str
    formula: str
    reasoning: str
    source_doc: str
    kind: OperationKind
    thinking: str = ""
    expr: Optional[FeatureExpr] = field(default=None, compare=False, repr=False)


def find_block(reply: str):
    """Return (fields, text before the block) for the first complete block.

    A complete block has Label, Calculation and Reasoning lines; the
    Reasoning field runs to the end of the block. Returns None if no fenced
    block is complete.
    """
    for m in _FENCE_RE.finditer(reply):
        fields, current = {}, None
        for line in m.group(1).splitlines():
            fm = _FIELD_RE.match(line)
            if fm and fm.group(1).lower() not in fields:
                current = fm.group(1).lower()
                fields[current] = fm.group(2).strip()
            elif current == "reasoning" and line.strip():
                fields[current] = f"{fields[current]} {line.strip()}".strip()
        if {"label", "calculation", "reasoning"} <= fields.keys():
            return fields, reply[: m.start()].strip()
    return None


def extract_proposal(reply: str, schema: Iterable, doc_id: str) -> CandidateProposal:
    """Parse an assistant reply into a validated :class:`CandidateProposal`.

    Raises
    ------
    MalformedProposal
        no complete fenced block, an empty or back-quoted label, a label that
        collides with an existing column, or a formula that fails to parse or
        validate against `schema`
    """
    schema = list(schema)
    found = find_block(reply or "")
    if found is None:
        raise MalformedProposal("no fenced block with Label, Calculation and Reasoning")
    fields, thinking = found
    label = fields["label"].strip().strip("\"'")
    if not label:
        raise MalformedProposal("empty label")
    if "`" in label:
        raise MalformedProposal(f"label {label!r} contains a back-quote")
    names = {m if isinstance(m, str) else m.name for m in schema}
    if label in names:
        raise MalformedProposal(f"label {label!r} collides with an existing column")
    formula = fields["calculation"].strip()
    try:
        expr = parse(formula)
        kind = classify(expr, schema)
    except FormulaError as e:
        raise MalformedProposal(f"formula {formula!r}: {e}") from e
    return CandidateProposal(
        label=label,
        formula=formula,
        reasoning=fields["reasoning"],
        source_doc=doc_id,
        kind=kind,
        thinking=thinking,
        expr=expr,
    )
