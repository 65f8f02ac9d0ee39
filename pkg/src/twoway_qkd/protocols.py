"""Round-by-round state machines for LM05, ping-pong and a BB84 baseline.

Each run splits its generator into two independent streams: one for Alice
and Bob, one handed to the attack hooks. The legitimate stream is drawn as a
fixed-width block per round, so a round's legitimate choices do not depend on
what Eve did in earlier rounds.
"""
from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields
from typing import Optional

import numpy as np

from . import quantum as q
from .attacks import AttackStrategy
from .channel import (
    LM05_ENCODING,
    PINGPONG_DECODING,
    PINGPONG_ENCODING,
    EveRecord,
    Mode,
    Protocol,
    RoundContext,
)


@dataclass(frozen=True)
class ProtocolConfig:
    protocol: Protocol
    rounds: int
    cm_probability: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise ValueError(f"rounds must be a positive integer, got {self.rounds!r}")
        if not 0.0 <= self.cm_probability <= 1.0:
            raise ValueError(f"cm_probability must lie in [0, 1], got {self.cm_probability!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class RoundRecord:
    """One round's public and private observables.

    Two-way protocols fill ``bob_prep`` plus either the MM fields
    (``alice_bit``, ``bob_decoded``) or the CM fields. BB84 rounds are all MM
    and use ``alice_prep``, ``bob_basis`` and ``sifted`` instead; there
    ``bob_decoded`` is Bob's raw measurement outcome. ``bob_decoded`` is
    None for a ping-pong erasure (Bob saw Φ±).
    """

    index: int
    mode: Mode
    bob_prep: Optional[str] = None
    alice_bit: Optional[int] = None
    alice_cm_basis: Optional[q.Basis] = None
    alice_cm_outcome: Optional[int] = None
    bob_decoded: Optional[int] = None
    attacked: bool = False
    eve_decoded: Optional[int] = None
    cm_error: Optional[bool] = None
    alice_prep: Optional[str] = None
    bob_basis: Optional[q.Basis] = None
    sifted: Optional[bool] = None

    @property
    def mm_error(self) -> Optional[bool]:
        if self.mode is not Mode.MM or (self.sifted is False):
            return None
        return self.bob_decoded != self.alice_bit


RECORD_COLUMNS = tuple(f.name for f in fields(RoundRecord))


@dataclass(frozen=True)
class Transcript:
    config: ProtocolConfig
    records: tuple[RoundRecord, ...]
    attack: dict
    eve: tuple[EveRecord, ...] = ()

    def __post_init__(self) -> None:
        if len(self.records) != self.config.rounds:
            raise ValueError("transcript length does not match config.rounds")

    def to_csv(self) -> str:
        """Deterministic text form of the public/private round log."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for rec in self.records:
            w.writerow(["" if v is None else _cell(v) for v in astuple(rec)])
        return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if hasattr(v, "value"):
        return str(v.value)
    return str(v)


def _setup(config, attack, rng, expected: Protocol):
    if config.protocol is not expected:
        raise ValueError(f"config is for {config.protocol.value}, runner is {expected.value}")
    attack = attack if attack is not None else AttackStrategy()
    attack.begin(expected)
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    legit, eve = rng.spawn(2)
    return attack, legit, eve


def _transcript(config, records, attack) -> Transcript:
    return Transcript(config, tuple(records), attack.describe(), tuple(attack.records))


def _bit(u: float) -> int:
    return 1 if u >= 0.5 else 0


def run_lm05(
    config: ProtocolConfig,
    attack: Optional[AttackStrategy] = None,
    rng: Optional[np.random.Generator] = None,
) -> Transcript:
    """LM05 with single qubits in the four BB84 states and encoding {I, iY}.

    Alice's mode coin is drawn after the forward hook. CM rounds compare
    Alice's outcome with Bob's preparation only when their bases match.
    """
    attack, legit, eve_rng = _setup(config, attack, rng, Protocol.LM05)
    # columns: preparation, mode coin, bit/CM basis, Alice's draw, Bob's draw
    draws = legit.random((config.rounds, 5))
    records = []
    for i, u in enumerate(draws):
        prep = q.BB84_LABELS[int(u[0] * 4)]
        basis, ref = q.label_basis(prep), q.label_bit(prep)
        ctx = RoundContext(i, Protocol.LM05, EveRecord(i))
        state = attack.forward(ctx, q.prepare_state(prep), eve_rng)
        if u[1] < config.cm_probability:
            a_basis = q.Basis.Z if u[2] < 0.5 else q.Basis.X
            outcome, _, _ = q.measure(state, a_basis, 0, u[3])
            records.append(RoundRecord(
                i, Mode.CM, bob_prep=prep,
                alice_cm_basis=a_basis, alice_cm_outcome=outcome,
                attacked=ctx.eve.attacked,
                cm_error=(outcome != ref) if a_basis is basis else None,
            ))
            continue
        bit = _bit(u[2])
        state = q.apply_unitary(state, LM05_ENCODING[bit], [0])
        if ctx.eve.attacked:
            state = attack.backward(ctx, state, eve_rng)
        outcome, _, _ = q.measure(state, basis, 0, u[4])
        records.append(RoundRecord(
            i, Mode.MM, bob_prep=prep, alice_bit=bit,
            bob_decoded=outcome ^ ref,
            attacked=ctx.eve.attacked,
            eve_decoded=ctx.eve.decoded if ctx.eve.attacked else None,
        ))
    return _transcript(config, records, attack)


def run_pingpong(
    config: ProtocolConfig,
    attack: Optional[AttackStrategy] = None,
    rng: Optional[np.random.Generator] = None,
) -> Transcript:
    """Ping-pong with Bob's pair in Ψ+ (home = qubit 0, travel = qubit 1).

    MM: Alice applies I or Z to the travel qubit, Bob Bell-measures and reads
    Ψ+ as 0, Ψ− as 1, Φ± as an erasure. CM: Alice and Bob both measure Z and
    expect anticorrelated outcomes.
    """
    attack, legit, eve_rng = _setup(config, attack, rng, Protocol.PINGPONG)
    # columns: mode coin, bit, Alice's draw, Bob's draw
    draws = legit.random((config.rounds, 4))
    pair = q.prepare_state("Psi+")
    records = []
    for i, u in enumerate(draws):
        ctx = RoundContext(i, Protocol.PINGPONG, EveRecord(i))
        state = attack.forward(ctx, pair, eve_rng)
        if u[0] < config.cm_probability:
            a_out, post, _ = q.measure(state, q.Basis.Z, 1, u[2])
            # an engaged Eve holds Bob's travel qubit; his home qubit is still in that pair
            home = ctx.eve.stored if ctx.eve.attacked and ctx.eve.stored is not None else post
            b_out, _, _ = q.measure(home, q.Basis.Z, 0, u[3])
            records.append(RoundRecord(
                i, Mode.CM, bob_prep="Psi+",
                alice_cm_basis=q.Basis.Z, alice_cm_outcome=a_out,
                attacked=ctx.eve.attacked,
                cm_error=a_out == b_out,
            ))
            continue
        bit = _bit(u[1])
        state = q.apply_unitary(state, PINGPONG_ENCODING[bit], [1])
        if ctx.eve.attacked:
            state = attack.backward(ctx, state, eve_rng)
        outcome, _ = q.bell_measure(state, u[3])
        records.append(RoundRecord(
            i, Mode.MM, bob_prep="Psi+", alice_bit=bit,
            bob_decoded=PINGPONG_DECODING.get(outcome),
            attacked=ctx.eve.attacked,
            eve_decoded=ctx.eve.decoded if ctx.eve.attacked else None,
        ))
    return _transcript(config, records, attack)


def run_bb84(
    config: ProtocolConfig,
    attack: Optional[AttackStrategy] = None,
    rng: Optional[np.random.Generator] = None,
) -> Transcript:
    """One-way BB84: random bit in a random basis, Bob measures in a random basis."""
    attack, legit, eve_rng = _setup(config, attack, rng, Protocol.BB84)
    # columns: bit, Alice's basis, Bob's basis, Bob's draw
    draws = legit.random((config.rounds, 4))
    records = []
    for i, u in enumerate(draws):
        bit = _bit(u[0])
        a_basis = q.Basis.Z if u[1] < 0.5 else q.Basis.X
        b_basis = q.Basis.Z if u[2] < 0.5 else q.Basis.X
        prep = q.bb84_label(a_basis, bit)
        ctx = RoundContext(i, Protocol.BB84, EveRecord(i))
        state = attack.forward(ctx, q.prepare_state(prep), eve_rng)
        outcome, _, _ = q.measure(state, b_basis, 0, u[3])
        records.append(RoundRecord(
            i, Mode.MM, alice_bit=bit, bob_decoded=outcome,
            attacked=ctx.eve.attacked,
            eve_decoded=ctx.eve.decoded if ctx.eve.attacked else None,
            alice_prep=prep, bob_basis=b_basis, sifted=a_basis is b_basis,
        ))
    return _transcript(config, records, attack)


RUNNERS = {
    Protocol.LM05: run_lm05,
    Protocol.PINGPONG: run_pingpong,
    Protocol.BB84: run_bb84,
}


def run_protocol(
    config: ProtocolConfig,
    attack: Optional[AttackStrategy] = None,
    rng: Optional[np.random.Generator] = None,
) -> Transcript:
    return RUNNERS[config.protocol](config, attack, rng)
