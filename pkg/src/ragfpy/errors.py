"""Exceptions raised across ragfpy.

Most of these also subclass ``ValueError`` so that callers who only care
about "bad input" can keep catching that.
"""


class RagfError(Exception):
    pass


# tabular


class DatasetError(RagfError, ValueError):
    pass


class DuplicateHeader(DatasetError):
    pass


class UnknownColumn(DatasetError):
    pass


class EmptyTable(DatasetError):
    pass


class SingleClassTarget(DatasetError):
    pass


class NameCollision(DatasetError):
    pass


class LengthMismatch(DatasetError):
    pass


class FoldError(DatasetError):
    pass


# formulas


class FormulaError(RagfError, ValueError):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class DepthExceeded(FormulaError):
    pass


class FormulaTypeError(FormulaError):
    pass


class UnknownFormulaColumn(FormulaError, UnknownColumn):
    pass


class NonFiniteResult(FormulaError):
    def __init__(self, row: int, formula: str = ""):
        super().__init__(f"non-finite value at row {row} evaluating {formula!r}")
        self.row = row


# knowledge base


class KnowledgeError(RagfError, ValueError):
    pass


class EmptyCorpus(KnowledgeError):
    pass


class DuplicateId(KnowledgeError):
    pass


class DimensionMismatch(KnowledgeError):
    pass


class ZeroVector(KnowledgeError):
    pass


class EmptyText(KnowledgeError):
    pass


class IndexFormatError(KnowledgeError):
    pass


# language-model gateway


class OracleError(RagfError):
    pass


class TransportError(OracleError):
    pass


class ReplayExhausted(OracleError):
    pass


class EmptyResponse(OracleError):
    pass


class MalformedProposal(OracleError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


# learners


class LearnerError(RagfError, ValueError):
    pass


class EmptyTrainingSet(LearnerError):
    pass


class SchemaMismatch(LearnerError):
    pass


class ConfigError(RagfError, ValueError):
    pass
