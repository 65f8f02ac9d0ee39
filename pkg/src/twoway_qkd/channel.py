"""Types shared by the protocol state machines and the eavesdropper hooks."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from . import quantum as q


class Protocol(str, Enum):
    LM05 = "LM05"
    PINGPONG = "PINGPONG"
    BB84 = "BB84"


class Mode(str, Enum):
    MM = "MM"  # message mode
    CM = "CM"  # control mode


class ContractViolation(RuntimeError):
    """Raised when a caller breaks an internal protocol/attack contract."""


# Alice's encodings: index = key bit.
LM05_ENCODING = (q.I, q.IY)
PINGPONG_ENCODING = (q.I, q.Z)
PINGPONG_DECODING = {q.BellOutcome.PSI_PLUS: 0, q.BellOutcome.PSI_MINUS: 1}


@dataclass
class EveRecord:
    """Eve's private per-round notes.

    ``stored`` holds Bob's untouched state while it sits in quantum memory
    (QMM only); ``decoded`` is her guess of Alice's bit on engaged MM rounds,
    or her measurement outcome for intercept-resend.
    """

    index: int
    attacked: bool = False
    stored: Optional[q.PureState] = None
    decoded: Optional[int] = None
    injected: Optional[str] = None


@dataclass
class RoundContext:
    """What an attack hook may see and write during one round.

    Deliberately carries nothing about Alice's or Bob's private choices.
    """

    index: int
    protocol: Protocol
    eve: EveRecord
