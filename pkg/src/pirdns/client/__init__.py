"""Client proxy: PIR lookups against the resolver, iterative fallback on misses."""

from .config import ClientConfig
from .proxy import (
    FULL_ITERATIVE, PIR_HIT, SHORTCUT_ANS, ChallengeResult, ClientProxy, KeyPair, ResolutionError,
    ResolutionOutcome, Transcript,
)
from .stub import StubListener, answer_question
from .transport import HttpAns, HttpResolver, InProcessAns, InProcessResolver, TransportError

__all__ = [
    "ClientConfig", "FULL_ITERATIVE", "PIR_HIT", "SHORTCUT_ANS", "ChallengeResult", "ClientProxy",
    "KeyPair", "ResolutionError", "ResolutionOutcome", "Transcript", "StubListener", "answer_question",
    "HttpAns", "HttpResolver", "InProcessAns", "InProcessResolver", "TransportError",
]
