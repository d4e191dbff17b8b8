import json

import pytest
import httpx

from ragfpy import errors, scenarios
from ragfpy.fexpr import OperationKind
from ragfpy.oracle import (
    ChatTranscript,
    Gateway,
    HTTPChatTransport,
    ReplayTransport,
    extract_proposal,
    parse_replay,
)
from ragfpy.oracle.proposals import CandidateProposal, find_block


@pytest.fixture
def bmi_doc_f(kb_f):
    return kb_f.get("bmi")


def _bmi_proposal():
    return extract_proposal(scenarios.BMI_PROPOSAL, ["weight", "height"], "bmi")


def test_parse_replay():
    text = "first\n---\n\nsecond\nline two\n\n---\nthird\n"
    assert parse_replay(text) == ["first", "second\nline two", "third"]
    assert parse_replay("a\n---\n") == ["a"]
    # a bare separator inside a record is still a separator
    assert parse_replay("a\n  ---  \nb") == ["a", "b"]


def test_replay_passthrough(bmi_f):
    gw = Gateway(ReplayTransport(["  weight   and\nheight  ", "second"]))
    assert gw.mode == "replay"
    assert gw.generate_query(bmi_f.description, bmi_f.schema) == "weight and height"
    assert gw.transport.cursor == 1 and gw.transport.remaining == 1
    assert gw.generate_query(bmi_f.description, bmi_f.schema) == "second"
    with pytest.raises(errors.ReplayExhausted):
        gw.generate_query(bmi_f.description, bmi_f.schema)
    assert [c.kind for c in gw.calls] == ["query", "query"]


def test_query_is_truncated(bmi_f):
    gw = Gateway(ReplayTransport(["x" * 600]))
    assert len(gw.generate_query("", bmi_f.schema)) == 512


def test_query_errors(bmi_f):
    with pytest.raises(errors.EmptyResponse):
        Gateway(ReplayTransport(["   \n  "])).generate_query("", bmi_f.schema)
    with pytest.raises(ValueError):
        Gateway(ReplayTransport(["q"])).generate_query("", [])


def test_query_prompt_carries_schema_and_goal(bmi_f):
    gw = Gateway(ReplayTransport(["q"]))
    gw.generate_query(bmi_f.description, bmi_f.schema, "detect overweight people")
    (role, system), (_, user) = gw.calls[0].messages
    assert role == "system" and system
    for name in bmi_f.feature_names:
        assert name in user
    assert "detect overweight people" in user
    assert bmi_f.description in user


def test_proposal_prompt_carries_document(bmi_f, bmi_doc_f):
    gw = Gateway(ReplayTransport([scenarios.BMI_PROPOSAL]))
    proposal = gw.propose_feature(bmi_doc_f, bmi_f.schema, bmi_f.description, scenarios.BMI_GOAL)
    user = gw.calls[0].messages[-1][1]
    assert bmi_doc_f.body in user
    assert "weight" in user and "height" in user
    assert "Label:" in user and "Calculation:" in user and "Reasoning:" in user
    assert "if <condition> then <value> else <value>" in user
    assert proposal.label == "bmi"
    assert proposal.source_doc == "bmi"
    assert proposal.kind is OperationKind.TRANSFORMATION
    assert proposal.thinking.startswith("The document defines BMI")


def test_fallback_mode(bmi_f, kb_f):
    gw = Gateway()
    assert gw.mode == "fallback"
    query = gw.generate_query(bmi_f.description, bmi_f.schema, "detect overweight people")
    assert query == "detect overweight people: features derived from weight, height"
    proposal = gw.propose_feature(kb_f.get("bmi"), bmi_f.schema, bmi_f.description)
    assert (proposal.label, proposal.formula) == ("bmi", "weight / (height * height)")
    with pytest.raises(errors.MalformedProposal):
        gw.propose_feature(kb_f.get("posture"), bmi_f.schema, bmi_f.description)
    assert gw.calls == []


def test_extract_proposal_errors():
    schema = ["weight", "height"]
    with pytest.raises(errors.MalformedProposal, match="fenced block"):
        extract_proposal("Label: x\nCalculation: weight\nReasoning: r", schema, "d")
    with pytest.raises(errors.MalformedProposal, match="formula"):
        extract_proposal(scenarios.USELESS_PROPOSALS[2], schema, "posture")
    collide = "```\nLabel: weight\nCalculation: weight * 2\nReasoning: r\n```"
    with pytest.raises(errors.MalformedProposal, match="collides"):
        extract_proposal(collide, schema, "d")
    empty = "```\nLabel:\nCalculation: weight * 2\nReasoning: r\n```"
    with pytest.raises(errors.MalformedProposal, match="empty label"):
        extract_proposal(empty, schema, "d")
    unknown = "```\nLabel: z\nCalculation: weight / unknown_col\nReasoning: r\n```"
    with pytest.raises(errors.MalformedProposal) as info:
        extract_proposal(unknown, schema, "d")
    assert "unknown_col" in info.value.reason


def test_first_complete_block_wins():
    reply = (
        "Scratch:\n```python\nx = 1\n```\n"
        "```\nLabel: ratio\nCalculation: weight / height\nReasoning: first line\n"
        "continues here\n```\n"
        "```\nLabel: other\nCalculation: weight\nReasoning: r\n```"
    )
    fields, thinking = find_block(reply)
    assert fields["label"] == "ratio"
    assert fields["reasoning"] == "first line continues here"
    assert thinking.startswith("Scratch:")


def test_extract_population_load_ratio():
    schema = ["Population", "Land Area (Km2)", "GDP"]
    reply = (
        "Crowding matters for this index.\n"
        "```\n"
        "Label: Population Load Ratio\n"
        "Calculation: Population / `Land Area (Km2)`\n"
        "Reasoning: People per square kilometre measure pressure on resources.\n"
        "```"
    )
    p = extract_proposal(reply, schema, "demography")
    assert p.label == "Population Load Ratio"
    assert p.kind is OperationKind.TRANSFORMATION
    assert isinstance(p, CandidateProposal)


def test_update_description_fallback():
    proposal = _bmi_proposal()
    out = Gateway().update_description("Health records.", proposal)
    assert out == (
        "Health records. Newly added feature: bmi = weight / (height * height). "
        + proposal.reasoning
    )


def test_update_description_replay():
    proposal = _bmi_proposal()
    gw = Gateway(ReplayTransport([scenarios.BMI_DESCRIPTION_UPDATE, "Nothing relevant."]))
    assert gw.update_description("old", proposal) == scenarios.BMI_DESCRIPTION_UPDATE
    # a reply that ignores the new label falls back to the template
    assert gw.update_description("old", proposal).startswith("old Newly added feature: bmi")


def test_update_description_exhaustion_propagates():
    proposal = _bmi_proposal()
    gw = Gateway(ReplayTransport([]))
    with pytest.raises(errors.ReplayExhausted):
        gw.update_description("old", proposal)


def _chat_response(text):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def test_http_transport_payload_and_retry():
    seen = []

    def handler(request):
        seen.append(request)
        if len(seen) == 1:
            return httpx.Response(502)
        return _chat_response("bmi weight height")

    client = httpx.Client(transport=httpx.MockTransport(handler))
    transport = HTTPChatTransport(
        "https://llm.test/v1/chat/completions", "m", "secret", options={"temperature": 0}, client=client
    )
    gw = Gateway(transport)
    assert gw.mode == "live"
    assert gw.generate_query("d", scenarios.bmi_table(20).schema) == "bmi weight height"
    assert len(seen) == 2
    assert seen[1].headers["Authorization"] == "Bearer secret"
    body = json.loads(seen[1].content)
    assert body["model"] == "m" and body["temperature"] == 0
    assert [m["role"] for m in body["messages"]] == ["system", "user"]


def test_http_transport_gives_up():
    client = httpx.Client(transport=httpx.MockTransport(lambda request: httpx.Response(500)))
    gw = Gateway(HTTPChatTransport("https://llm.test/chat", "m", "k", client=client))
    with pytest.raises(errors.TransportError):
        gw.generate_query("d", scenarios.bmi_table(20).schema)
    # the description update degrades to the template instead
    out = gw.update_description("old", _bmi_proposal())
    assert out.startswith("old Newly added feature: bmi")


def test_http_transport_bad_json():
    client = httpx.Client(transport=httpx.MockTransport(lambda request: httpx.Response(200, json={})))
    transport = HTTPChatTransport("https://llm.test/chat", "m", "k", client=client)
    with pytest.raises(errors.TransportError):
        transport.complete(ChatTranscript().add("user", "hi"))


def test_transcript_roles():
    with pytest.raises(ValueError):
        ChatTranscript().add("tool", "x")
    with pytest.raises(ValueError):
        ChatTranscript().as_payload()
