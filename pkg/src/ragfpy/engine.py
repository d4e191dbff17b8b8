"""
Feature-generation engine
-------------------------

The iterative loop: build a retrieval query from the current dataset
description, retrieve the top-k knowledge documents, ask the gateway for one
feature per document, score every well-formed candidate by cross-validation
on the training rows, and keep the best candidate only if it strictly
improves on the best score so far. The loop stops after `patience`
consecutive non-improving iterations or after `max_iterations`.
"""
import hashlib, json, logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import List, Optional

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from . import __version__
from .errors import ConfigError, FormulaError, MalformedProposal, NameCollision
from .fexpr import evaluate
from .knowledge import KnowledgeBase, RetrievalResult, make_embedder
from .learners import Learner, LearnerConfig
from .metrics import METRICS, MetricsReport, classification_report, information_gain
from .oracle import CandidateProposal, Gateway
from .tabular import Dataset, FeatureMeta, FoldPlan, holdout_split, make_folds

PATIENCE = "patience"
MAX_ITERATIONS = "max_iterations"
ACCEPTED = "accepted"
REJECTED = "rejected"


@dataclass(frozen=True)
class EngineConfig:
    """Settings of one engine run.

    Parameters
    ----------
    max_iterations : int
        upper bound T on iterations, by default 10
    patience : int
        consecutive non-improving iterations K before stopping, by default 3
    top_k : int
        documents retrieved per iteration, by default 3
    metric : str
        score driving adoption: accuracy, macro_f1, macro_precision or
        macro_recall
    learner : LearnerConfig
        downstream classifier settings
    cv_folds : int
        cross-validation folds over the training rows, by default 5
    seed : int
        seed of the held-out split and the folds
    task_goal : str
        what the classifier is for, included in every prompt
    test_fraction : float
        share of rows held out for the final report; 0 disables it
    info_bins : int
        equal-frequency bins per feature for information gain
    n_jobs : int
        joblib workers used to score candidates
    """

    max_iterations: int = 10
    patience: int = 3
    top_k: int = 3
    metric: str = "accuracy"
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    cv_folds: int = 5
    seed: int = 0
    task_goal: str = ""
    test_fraction: float = 0.2
    info_bins: int = 4
    n_jobs: int = 1

    def __post_init__(self):
        for name in ("max_iterations", "patience", "top_k"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1, got {getattr(self, name)}.")
        if self.cv_folds < 2:
            raise ConfigError(f"cv_folds must be at least 2, got {self.cv_folds}.")
        if self.metric not in METRICS:
            raise ConfigError(f"Unknown metric {self.metric!r}; expected one of {METRICS}.")
        if not 0 <= self.test_fraction < 1:
            raise ConfigError(f"test_fraction must be in [0, 1), got {self.test_fraction}.")
        if self.info_bins < 2:
            raise ConfigError(f"info_bins must be at least 2, got {self.info_bins}.")
        if self.n_jobs == 0:
            raise ConfigError("n_jobs must be non-zero.")


@dataclass(frozen=True)
class CandidateResult:
    """One retrieved document's proposal and its fate."""

    doc_id: str
    rank: int
    proposal: Optional[CandidateProposal] = None
    score: Optional[float] = None
    reason: str = ""

    @property
    def valid(self) -> bool:
        return self.score is not None


@dataclass(frozen=True)
class IterationRecord:
    t: int
    query: str
    retrieved: RetrievalResult
    candidates: List[CandidateResult]
    chosen: Optional[CandidateResult]
    decision: str
    best_score: float
    description_after: str
    info_gain_bits: float


@dataclass
class RunResult:
    """Outcome of an engine run.

    ``dataset`` holds the final feature set F* with its final description;
    ``base_test``/``final_test`` are held-out reports on F0 and F*, or
    out-of-fold reports when no rows were held out.
    """

    dataset: Dataset
    base_features: List[FeatureMeta]
    base_score: float
    best_score: float
    iterations: List[IterationRecord]
    stop_reason: str
    train_rows: np.ndarray
    test_rows: np.ndarray
    base_test: Optional[MetricsReport] = None
    final_test: Optional[MetricsReport] = None
    info_gain_bits: float = 0.0

    @property
    def final_features(self) -> List[FeatureMeta]:
        return self.dataset.schema

    @property
    def adopted(self) -> List[IterationRecord]:
        return [r for r in self.iterations if r.decision == ACCEPTED]


def description_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def candidate_meta(proposal: CandidateProposal, t: Optional[int] = None) -> FeatureMeta:
    return FeatureMeta(
        name=proposal.label,
        description=proposal.reasoning,
        origin=t,
        formula=proposal.formula,
    )


def augment(d: Dataset, proposal: CandidateProposal, t: Optional[int] = None) -> Dataset:
    """`d` with the proposal's column appended.

    Raises
    ------
    NonFiniteResult
        the formula is not finite on some row
    NameCollision
        the label is already a column (or the target) of `d`
    """
    values = evaluate(proposal.expr, d)
    return d.append_feature(candidate_meta(proposal, t), values)


def evaluate_candidate(
    d: Dataset,
    proposal: CandidateProposal,
    config: EngineConfig,
    folds: Optional[FoldPlan] = None,
    learner=None,
    n_jobs: Optional[int] = None,
) -> float:
    """Cross-validated score of `d` plus the candidate column.

    `folds` defaults to the engine's folds over the training rows of `d`.
    The augmented dataset is discarded.
    """
    learner = learner or Learner(config.learner)
    if folds is None:
        train_rows, _ = holdout_split(d, config.test_fraction, config.seed)
        folds = make_folds(d, config.cv_folds, config.seed, rows=train_rows)
    return learner.evaluate_cv(augment(d, proposal), folds, config.metric, n_jobs)


def held_out_report(learner, d: Dataset, train_rows, test_rows, folds: Optional[FoldPlan] = None):
    """Metrics of a model trained on `train_rows` and scored on `test_rows`.

    Without test rows, out-of-fold predictions over `folds` are scored
    instead; without folds either, None.
    """
    if len(test_rows) > 0:
        model = learner.train(d, train_rows)
        y_pred = learner.predict(model, d, test_rows)
        return classification_report(d.target[test_rows], y_pred, d.classes)
    if folds is None:
        return None
    rows, y_pred = [], []
    for fold_train, fold_test in folds.folds():
        model = learner.train(d, fold_train)
        rows.append(fold_test)
        y_pred.append(learner.predict(model, d, fold_test))
    rows = np.concatenate(rows)
    return classification_report(d.target[rows], np.concatenate(y_pred), d.classes)


def iteration_record_dict(record: IterationRecord) -> dict:
    """Provenance form of an iteration, fields in fixed order."""
    candidates = []
    for c in record.candidates:
        p = c.proposal
        candidates.append(
            {
                "doc": c.doc_id,
                "rank": c.rank,
                "label": p.label if p else None,
                "formula": p.formula if p else None,
                "kind": p.kind.value if p else None,
                "score": c.score,
                "reason": c.reason,
                "reasoning": p.reasoning if p else None,
                "thinking": p.thinking if p else None,
            }
        )
    chosen = record.chosen
    return {
        "t": record.t,
        "query": record.query,
        "retrieved": [{"id": i, "score": s} for i, s in record.retrieved.ranked],
        "candidates": candidates,
        "decision": record.decision,
        "chosen": chosen.proposal.label if chosen else None,
        "chosen_score": chosen.score if chosen else None,
        "best_score": record.best_score,
        "info_gain_bits": record.info_gain_bits,
        "description_sha256": description_hash(record.description_after),
        "description": record.description_after,
    }


def summary_dict(result: RunResult) -> dict:
    original, generated = result.dataset.feature_counts()
    return {
        "summary": {
            "stop_reason": result.stop_reason,
            "base_score": result.base_score,
            "best_score": result.best_score,
            "iterations": len(result.iterations),
            "adopted": [m.name for m in result.final_features if m.generated],
            "original_features": original,
            "generated_features": generated,
            "info_gain_bits": result.info_gain_bits,
        }
    }


class ProvenanceWriter(object):
    """Line-delimited JSON provenance log, flushed after every record.

    The first line is the only one carrying a timestamp.
    """

    def __init__(self, path, mode: str = ""):
        self.path = path
        self.f = open(path, "w", encoding="utf-8", newline="\n")
        created = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self._write({"header": {"created": created, "ragfpy": __version__, "mode": mode}})

    def _write(self, payload: dict):
        self.f.write(json.dumps(payload, ensure_ascii=False) + "\n")
        self.f.flush()

    def iteration(self, record: IterationRecord):
        self._write(iteration_record_dict(record))

    def summary(self, result: RunResult):
        self._write(summary_dict(result))

    def close(self):
        if not self.f.closed:
            self.f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_provenance(result: RunResult, path, mode: str = "") -> None:
    """Write every iteration of `result` and its summary to `path`."""
    with ProvenanceWriter(path, mode) as writer:
        for record in result.iterations:
            writer.iteration(record)
        writer.summary(result)


class FeatureGenerator(object):
    """Runs the retrieve, propose, evaluate and validate loop.

    Parameters
    ----------
    config : EngineConfig
        run settings
    kb : KnowledgeBase
        indexed domain documents
    gateway : Gateway
        language-model gateway (live, replay or fallback)
    learner : optional
        downstream task model; a :class:`~ragfpy.learners.Learner` built
        from ``config.learner`` by default
    embedder : optional
        query embedder; rebuilt from ``kb.embedder_id`` by default
    provenance : ProvenanceWriter, optional
        receives each iteration as soon as it is decided
    """

    def __init__(
        self,
        config: EngineConfig,
        kb: KnowledgeBase,
        gateway: Gateway,
        learner=None,
        embedder=None,
        provenance: Optional[ProvenanceWriter] = None,
        progress: bool = False,
    ):
        self.config = config
        self.kb = kb
        self.gateway = gateway
        self.learner = learner or Learner(config.learner)
        self.embedder = embedder or make_embedder(kb.embedder_id)
        self.provenance = provenance
        self.progress = progress

    def _propose(self, d: Dataset, retrieved: RetrievalResult) -> List[CandidateResult]:
        out = []
        for rank, doc_id in enumerate(retrieved.ids):
            doc = self.kb.get(doc_id)
            try:
                proposal = self.gateway.propose_feature(
                    doc, d.schema, d.description, self.config.task_goal
                )
            except MalformedProposal as e:
                logging.info(f"\t{doc_id}: malformed proposal ({e.reason})")
                out.append(CandidateResult(doc_id, rank, reason=f"MalformedProposal: {e.reason}"))
                continue
            if proposal.label == d.target_name:
                reason = f"MalformedProposal: label {proposal.label!r} collides with the target"
                out.append(CandidateResult(doc_id, rank, proposal, reason=reason))
                continue
            out.append(CandidateResult(doc_id, rank, proposal))
        return out

    def _score(self, d: Dataset, candidates: List[CandidateResult], folds: FoldPlan):
        augmented, scored = [], []
        for c in candidates:
            if c.proposal is None or c.reason:
                scored.append(c)
                continue
            try:
                augmented.append((c, augment(d, c.proposal)))
            except (FormulaError, NameCollision) as e:
                scored.append(CandidateResult(c.doc_id, c.rank, c.proposal, reason=f"{type(e).__name__}: {e}"))
        inner_jobs = 1 if self.config.n_jobs != 1 else None
        scores = Parallel(n_jobs=self.config.n_jobs)(
            delayed(self.learner.evaluate_cv)(da, folds, self.config.metric, inner_jobs)
            for _, da in augmented
        )
        for (c, _), s in zip(augmented, scores):
            scored.append(CandidateResult(c.doc_id, c.rank, c.proposal, score=float(s)))
        scored.sort(key=lambda c: c.rank)
        for c in scored:
            if c.valid:
                logging.info(f"\t{c.doc_id}: {c.proposal.label} = {c.proposal.formula} -> {c.score:.4f}")
            else:
                logging.info(f"\t{c.doc_id}: rejected ({c.reason})")
        return scored

    def run(self, d0: Dataset) -> RunResult:
        config = self.config
        train_rows, test_rows = holdout_split(d0, config.test_fraction, config.seed)
        folds = make_folds(d0, config.cv_folds, config.seed, rows=train_rows)
        base_names = list(d0.feature_names)
        base_score = self.learner.evaluate_cv(d0, folds, config.metric)
        logging.info(f"Base {config.metric} on {len(base_names)} features: {base_score:.4f}")

        d, best, no_improve = d0, base_score, 0
        iterations: List[IterationRecord] = []
        adopted_docs: List[str] = []
        info_gain_bits = 0.0
        stop_reason = MAX_ITERATIONS
        for t in tqdm(
            range(1, config.max_iterations + 1), desc="Generating features", disable=not self.progress
        ):
            query = self.gateway.generate_query(d.description, d.schema, config.task_goal)
            retrieved = self.kb.retrieve(self.embedder, query, config.top_k, exclude=adopted_docs)
            logging.info(f"Iteration {t}: query {query!r}, retrieved {retrieved.ids}")
            candidates = self._score(d, self._propose(d, retrieved), folds)
            valid = [c for c in candidates if c.valid]
            chosen = min(valid, key=lambda c: (-c.score, c.rank, c.doc_id)) if valid else None
            if chosen is not None and chosen.score > best:
                d = augment(d, chosen.proposal, t)
                d = d.with_description(
                    self.gateway.update_description(d.description, chosen.proposal)
                )
                best = chosen.score
                adopted_docs.append(chosen.doc_id)
                info_gain_bits = information_gain(base_names, d.feature_names, d, config.info_bins)
                no_improve = 0
                decision = ACCEPTED
                logging.info(
                    f"Iteration {t}: adopted {chosen.proposal.label} ({best:.4f}), "
                    f"information gain {info_gain_bits:.4f} bits"
                )
            else:
                no_improve += 1
                decision = REJECTED
                logging.info(f"Iteration {t}: no improvement over {best:.4f} ({no_improve}/{config.patience})")
            record = IterationRecord(
                t=t,
                query=query,
                retrieved=retrieved,
                candidates=candidates,
                chosen=chosen,
                decision=decision,
                best_score=best,
                description_after=d.description,
                info_gain_bits=info_gain_bits,
            )
            iterations.append(record)
            if self.provenance is not None:
                self.provenance.iteration(record)
            if no_improve >= config.patience:
                stop_reason = PATIENCE
                break
        logging.info(f"Stopped after {len(iterations)} iterations ({stop_reason})")

        result = RunResult(
            dataset=d,
            base_features=d0.schema,
            base_score=base_score,
            best_score=best,
            iterations=iterations,
            stop_reason=stop_reason,
            train_rows=train_rows,
            test_rows=test_rows,
            base_test=held_out_report(self.learner, d0, train_rows, test_rows, folds),
            final_test=held_out_report(self.learner, d, train_rows, test_rows, folds),
            info_gain_bits=info_gain_bits,
        )
        scope = "Held-out" if len(test_rows) else "Out-of-fold"
        logging.info(
            f"{scope} {config.metric}: {result.base_test.get(config.metric):.4f} -> "
            f"{result.final_test.get(config.metric):.4f}"
        )
        if self.provenance is not None:
            self.provenance.summary(result)
        return result


def run(
    config: EngineConfig,
    d0: Dataset,
    kb: KnowledgeBase,
    gateway: Gateway,
    learner=None,
    embedder=None,
    provenance: Optional[ProvenanceWriter] = None,
    progress: bool = False,
) -> RunResult:
    """Run the feature-generation loop on `d0`; see :class:`FeatureGenerator`."""
    generator = FeatureGenerator(config, kb, gateway, learner, embedder, provenance, progress)
    return generator.run(d0)
