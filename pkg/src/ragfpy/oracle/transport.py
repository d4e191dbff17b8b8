"""Chat transports: a live HTTP chat-completion client and a replay script."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import httpx

from ..errors import ReplayExhausted, TransportError

ROLES = ("system", "user", "assistant")
REPLAY_SEPARATOR = "---"


@dataclass
class ChatTranscript:
    """Ordered (role, text) messages of one gateway call."""

    messages: List[Tuple[str, str]] = field(default_factory=list)

    def add(self, role: str, text: str) -> "ChatTranscript":
        if role not in ROLES:
            raise ValueError(f"Unknown chat role {role!r}.")
        self.messages.append((role, text))
        return self

    def as_payload(self) -> List[Dict[str, str]]:
        if not self.messages:
            raise ValueError("A chat transcript must contain at least one message.")
        return [{"role": r, "content": t} for r, t in self.messages]


class HTTPChatTransport(object):
    """Chat-completion client for an OpenAI-compatible endpoint.

    Parameters
    ----------
    endpoint : str
        full URL of the chat-completions route
    model : str
        model name sent with every request
    api_key : str
        bearer token
    timeout : float, optional
        request timeout in seconds, by default 60
    options : dict, optional
        extra request fields (temperature, top_p, ...), passed through
    client : httpx.Client, optional
        pre-built client, mostly for tests
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str,
        timeout: float = 60.0,
        options: Optional[dict] = None,
        client: Optional[httpx.Client] = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.options = dict(options or {})
        self.client = client or httpx.Client(timeout=timeout)

    def complete(self, transcript: ChatTranscript) -> str:
        payload = dict(self.options)
        payload["model"] = self.model
        payload["messages"] = transcript.as_payload()
        headers = {"Authorization": f"Bearer {self.api_key}"}
        try:
            response = self.client.post(self.endpoint, json=payload, headers=headers)
            response.raise_for_status()
            return response.json()["choices"][0]["message"]["content"]
        except httpx.HTTPError as e:
            raise TransportError(f"Chat request to {self.endpoint} failed: {e}") from e
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise TransportError(f"Unexpected chat response from {self.endpoint}: {e}") from e


class ReplayTransport(object):
    """Answers the i-th call with the i-th scripted record.

    A replay file is plain text; records are separated by lines consisting of
    ``---``. Surrounding blank lines of each record are stripped.
    """

    def __init__(self, records: List[str], source: str = "<replay>"):
        self.records = list(records)
        self.source = source
        self.cursor = 0

    @classmethod
    def from_file(cls, path) -> "ReplayTransport":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        return cls(parse_replay(text), str(path))

    @property
    def remaining(self) -> int:
        return len(self.records) - self.cursor

    def complete(self, transcript: ChatTranscript) -> str:
        if self.cursor >= len(self.records):
            raise ReplayExhausted(
                f"{self.source} has {len(self.records)} records; call {self.cursor + 1} has no answer."
            )
        reply = self.records[self.cursor]
        self.cursor += 1
        logging.debug(f"Replay record {self.cursor}/{len(self.records)}")
        return reply


def parse_replay(text: str) -> List[str]:
    records, current = [], []
    for line in text.splitlines():
        if line.strip() == REPLAY_SEPARATOR:
            records.append("\n".join(current).strip("\n"))
            current = []
        else:
            current.append(line)
    tail = "\n".join(current).strip("\n")
    if tail:
        records.append(tail)
    return records
