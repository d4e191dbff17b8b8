"""
Knowledge base
--------------

Domain documents are embedded once at indexing time and retrieved by cosine
similarity against an embedded query. Two embedders are provided: a
deterministic feature-hashing bag of words (the default), and a remote
embedder calling an OpenAI-style ``/embeddings`` endpoint.
"""
import json, logging, re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import httpx
import numpy as np
from sklearn.utils import murmurhash3_32

from .errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyCorpus,
    EmptyText,
    IndexFormatError,
    KnowledgeError,
    TransportError,
    ZeroVector,
)

DEFAULT_DIM = 256
DEFAULT_TOP_K = 3
CORPUS_SUFFIXES = (".txt", ".md")

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


class HashEmbedder(object):
    """Signed feature hashing of lower-cased alphanumeric tokens.

    Each token is hashed into one of `dim` buckets (murmurhash3, seed 0) and
    given a +1/-1 sign from a second hash (seed 1); the summed vector is
    L2-normalised.
    """

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise ValueError(f"Embedding dimension must be positive, got {dim}.")
        self.dim = dim

    @property
    def embedder_id(self) -> str:
        return f"hash-{self.dim}"

    @staticmethod
    def tokens(text: str) -> List[str]:
        return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmptyText("Cannot embed empty text.")
        v = np.zeros(self.dim, dtype=np.float64)
        for token in self.tokens(text):
            bucket = murmurhash3_32(token, seed=0, positive=True) % self.dim
            sign = 1.0 if murmurhash3_32(token, seed=1, positive=True) & 1 else -1.0
            v[bucket] += sign
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ZeroVector(f"Text {text[:40]!r} has no tokens that survive hashing.")
        return v / norm


class RemoteEmbedder(object):
    """Embeddings from an OpenAI-compatible ``POST {endpoint}`` call.

    The provider's vector is returned verbatim. One retry on transport
    failure.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: Optional[str] = None,
        timeout: float = 60.0,
        client: Optional[httpx.Client] = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.client = client or httpx.Client(timeout=timeout)

    @property
    def embedder_id(self) -> str:
        return f"remote:{self.model}"

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmptyText("Cannot embed empty text.")
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        payload = {"model": self.model, "input": text}
        for attempt in (1, 2):
            try:
                response = self.client.post(self.endpoint, json=payload, headers=headers)
                response.raise_for_status()
                return np.asarray(response.json()["data"][0]["embedding"], dtype=np.float64)
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as e:
                if attempt == 2:
                    raise TransportError(f"Embedding request failed: {e}") from e
                logging.warning(f"Embedding request failed ({e}); retrying once")


def make_embedder(embedder_id: str, endpoint: Optional[str] = None, api_key: Optional[str] = None):
    """Rebuild the embedder a knowledge base was indexed with."""
    if embedder_id.startswith("hash-"):
        return HashEmbedder(int(embedder_id[len("hash-") :]))
    if embedder_id.startswith("remote:"):
        if not endpoint:
            raise KnowledgeError(
                f"Knowledge base uses {embedder_id!r}; an embedding endpoint is required."
            )
        return RemoteEmbedder(endpoint, embedder_id[len("remote:") :], api_key)
    raise IndexFormatError(f"Unknown embedder id {embedder_id!r}.")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity ``a.b / (|a| |b|)``, clipped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"Cannot compare vectors of shape {a.shape} and {b.shape}.")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroVector("Cosine similarity is undefined for a zero vector.")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True, eq=False)
class Document:
    id: str
    title: str
    body: str
    embedding: np.ndarray


@dataclass(frozen=True)
class RetrievalResult:
    ranked: Tuple[Tuple[str, float], ...]
    query_text: str

    @property
    def ids(self) -> List[str]:
        return [doc_id for doc_id, _ in self.ranked]


class KnowledgeBase(object):
    """An immutable set of embedded documents sharing one embedding space.

    Parameters
    ----------
    docs : sequence of Document
        documents, unique ids
    dim : int
        embedding dimension every document must have
    embedder_id : str
        name of the embedder configuration (see :func:`make_embedder`)
    """

    def __init__(self, docs: Sequence[Document], dim: int, embedder_id: str):
        if not docs:
            raise EmptyCorpus("A knowledge base needs at least one document.")
        ids = set()
        for doc in docs:
            if doc.id in ids:
                raise DuplicateId(f"Duplicate document id {doc.id!r}.")
            ids.add(doc.id)
            if doc.embedding.shape != (dim,):
                raise DimensionMismatch(
                    f"Document {doc.id!r} has dimension {doc.embedding.shape}, expected {dim}."
                )
            if np.linalg.norm(doc.embedding) == 0:
                raise ZeroVector(f"Document {doc.id!r} has a zero embedding.")
        self.docs = tuple(sorted(docs, key=lambda d: d.id))
        self.dim = dim
        self.embedder_id = embedder_id
        self._by_id = {d.id: d for d in self.docs}

    def __len__(self):
        return len(self.docs)

    def get(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    def retrieve(self, embedder, query: str, k: int = DEFAULT_TOP_K, exclude: Iterable[str] = ()):
        """Top-`k` documents by cosine similarity to ``embedder.embed(query)``.

        Ties are broken by ascending document id. Documents in `exclude` are
        skipped. The ranking equals a full scan followed by a stable sort.
        """
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}.")
        q = embedder.embed(query)
        if q.shape != (self.dim,):
            raise DimensionMismatch(
                f"Query embedding has shape {q.shape}, knowledge base dimension is {self.dim}."
            )
        excluded = set(exclude)
        scored = [(d.id, cosine(q, d.embedding)) for d in self.docs if d.id not in excluded]
        scored.sort(key=lambda t: (-t[1], t[0]))
        return RetrievalResult(tuple(scored[:k]), query)

    def to_json(self) -> str:
        payload = {
            "embedder_id": self.embedder_id,
            "dim": self.dim,
            "documents": [
                {
                    "id": d.id,
                    "title": d.title,
                    "body": d.body,
                    "embedding": [float(x) for x in d.embedding],
                }
                for d in self.docs
            ],
        }
        return json.dumps(payload, indent=1, ensure_ascii=False) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_json())

    @classmethod
    def load(cls, path) -> "KnowledgeBase":
        try:
            with open(path, "r", encoding="utf-8") as f:
                payload = json.load(f)
            docs = [
                Document(
                    d["id"],
                    d["title"],
                    d["body"],
                    np.asarray(d["embedding"], dtype=np.float64),
                )
                for d in payload["documents"]
            ]
            return cls(docs, int(payload["dim"]), payload["embedder_id"])
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise IndexFormatError(f"{path} is not a knowledge-base index: {e}") from e


def read_document(path: Path) -> Tuple[str, str, str]:
    """(id, title, body) for a corpus file"""
    try:
        body = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise KnowledgeError(f"Cannot read document {path}: {e}") from e
    first = body.splitlines()[0] if body else ""
    title = first[2:].strip() if first.startswith("# ") else path.stem
    return path.stem, title, body


def index(doc_dir, embedder) -> KnowledgeBase:
    """Embed every ``.txt``/``.md`` file in `doc_dir` as one document.

    Document ids are file stems; a first line starting with ``# `` is the
    title, otherwise the stem is.
    """
    doc_dir = Path(doc_dir)
    if not doc_dir.is_dir():
        raise KnowledgeError(f"{doc_dir} is not a directory.")
    paths = sorted(p for p in doc_dir.iterdir() if p.is_file() and p.suffix in CORPUS_SUFFIXES)
    if not paths:
        raise EmptyCorpus(f"No .txt or .md documents in {doc_dir}.")
    docs, seen = [], {}
    for path in paths:
        doc_id, title, body = read_document(path)
        if doc_id in seen:
            raise DuplicateId(f"{path.name} and {seen[doc_id].name} share the id {doc_id!r}.")
        seen[doc_id] = path
        docs.append(Document(doc_id, title, body, embedder.embed(body)))
    dim = docs[0].embedding.shape[0]
    logging.info(f"Indexed {len(docs)} documents from {doc_dir} with {embedder.embedder_id}")
    return KnowledgeBase(docs, dim, embedder.embedder_id)


def retrieve(kb: KnowledgeBase, query: str, k: int = DEFAULT_TOP_K, embedder=None, exclude=()):
    """Module-level form of :meth:`KnowledgeBase.retrieve`.

    Without an explicit `embedder`, the one named by ``kb.embedder_id`` is
    rebuilt (hash embedders only).
    """
    if embedder is None:
        embedder = make_embedder(kb.embedder_id)
    return kb.retrieve(embedder, query, k, exclude)
