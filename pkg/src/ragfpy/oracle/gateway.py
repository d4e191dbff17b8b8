import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from ..errors import EmptyResponse, TransportError
from ..tabular import FeatureMeta
from . import prompts
from .proposals import CandidateProposal, extract_proposal
from .transport import ChatTranscript

MAX_QUERY_CHARS = 512


@dataclass(frozen=True)
class GatewayCall:
    """One recorded exchange: call kind, prompt messages and the reply."""

    kind: str
    messages: Tuple[Tuple[str, str], ...]
    reply: str


class Gateway(object):
    """Language-model gateway for query generation, proposals and description updates.

    Parameters
    ----------
    transport : object, optional
        anything with ``complete(ChatTranscript) -> str``; an
        :class:`~ragfpy.oracle.transport.HTTPChatTransport` for live runs or a
        :class:`~ragfpy.oracle.transport.ReplayTransport` for scripted ones.
        Without a transport the gateway runs in fallback mode: queries and
        descriptions come from fixed templates and proposals are read from
        a Label / Calculation / Reasoning block inside the document itself.
    """

    def __init__(self, transport=None):
        self.transport = transport
        self.calls: List[GatewayCall] = []

    @property
    def mode(self) -> str:
        if self.transport is None:
            return "fallback"
        return "replay" if hasattr(self.transport, "records") else "live"

    def _complete(self, kind: str, user_text: str) -> str:
        transcript = ChatTranscript()
        transcript.add("system", prompts.SYSTEM_PROMPT).add("user", user_text)
        logging.debug(f"Gateway call {kind} ({self.mode})")
        try:
            reply = self.transport.complete(transcript)
        except TransportError as e:
            logging.warning(f"{kind} call failed ({e}); retrying once")
            reply = self.transport.complete(transcript)
        self.calls.append(GatewayCall(kind, tuple(transcript.messages), reply))
        return reply

    def generate_query(
        self, description: str, schema: Sequence[FeatureMeta], task_goal: str = ""
    ) -> str:
        """Retrieval query for the current dataset state.

        The reply is collapsed onto a single line and cut to 512 characters.

        Raises
        ------
        EmptyResponse
            the reply is blank
        TransportError
            the call failed twice
        """
        if not schema:
            raise ValueError("Cannot build a query for an empty schema.")
        if self.transport is None:
            query = prompts.fallback_query(schema, task_goal)
        else:
            reply = self._complete("query", prompts.query_prompt(description, schema, task_goal))
            query = " ".join((reply or "").split())
        if not query:
            raise EmptyResponse("The query reply was empty.")
        return query[:MAX_QUERY_CHARS]

    def propose_feature(
        self, doc, schema: Sequence[FeatureMeta], description: str, task_goal: str = ""
    ) -> CandidateProposal:
        """Ask for one feature grounded on `doc`.

        Raises
        ------
        MalformedProposal
            the reply has no usable block or its formula does not validate
        """
        if self.transport is None:
            reply = doc.body
        else:
            prompt = prompts.proposal_prompt(doc, schema, description, task_goal)
            reply = self._complete("proposal", prompt)
        return extract_proposal(reply, schema, doc.id)

    def update_description(self, description: str, adopted: CandidateProposal) -> str:
        """New dataset description after `adopted` joined the feature set.

        A reply that mentions the adopted label is kept verbatim. A reply
        that does not, or a call that fails, yields the original text with
        ``Newly added feature: <label> = <formula>. <reasoning>`` appended.
        """
        if self.transport is None:
            return prompts.fallback_description(description, adopted)
        try:
            reply = self._complete("description", prompts.description_prompt(description, adopted))
        except TransportError as e:
            logging.warning(f"Description update failed ({e}); using the template")
            return prompts.fallback_description(description, adopted)
        reply = (reply or "").strip()
        if adopted.label in reply:
            return reply
        logging.debug(f"Description reply does not mention {adopted.label!r}; using the template")
        return prompts.fallback_description(description, adopted)
