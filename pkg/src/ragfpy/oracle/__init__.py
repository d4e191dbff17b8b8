"""Language-model gateway with live, replay and fallback modes."""
from .gateway import Gateway, GatewayCall
from .proposals import CandidateProposal, extract_proposal
from .transport import ChatTranscript, HTTPChatTransport, ReplayTransport, parse_replay
