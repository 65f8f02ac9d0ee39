"""Eavesdropper strategies with forward- and backward-leg hooks.

Every strategy describes what happens on an engaged round as a list of
probability-weighted branches. The protocol runners sample one branch per
hook call; :func:`exact_signature` walks all of them to get exact
expectation values from the same code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.linalg import null_space

from . import quantum as q
from .channel import (
    LM05_ENCODING,
    PINGPONG_DECODING,
    PINGPONG_ENCODING,
    ContractViolation,
    EveRecord,
    Mode,
    Protocol,
    RoundContext,
)

COEFF_TOL = 1e-10
_TINY = 1e-15


class AttackKind(str, Enum):
    NONE = "NONE"
    QMM = "QMM"
    INTERCEPT_RESEND = "INTERCEPT_RESEND"
    LUCAI = "LUCAI"


class Branch(NamedTuple):
    prob: float
    decoded: Optional[int]
    state: q.PureState
    injected: Optional[str] = None


StateLike = Union[str, q.PureState]


def _as_state(s: StateLike) -> q.PureState:
    return q.prepare_state(s) if isinstance(s, str) else s


class AttackStrategy:
    """Base class; also the do-nothing strategy.

    An instance keeps Eve's per-run notes in ``records`` and must only be
    driven by one protocol run at a time.
    """

    kind = AttackKind.NONE
    supported: frozenset = frozenset(Protocol)

    def __init__(self, f: float = 0.0) -> None:
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"attack fraction f must lie in [0, 1], got {f!r}")
        self.f = float(f)
        self.protocol: Optional[Protocol] = None
        self.records: list[EveRecord] = []

    def __repr__(self) -> str:
        return f"{type(self).__name__}(f={self.f})"

    def begin(self, protocol: Protocol) -> None:
        protocol = Protocol(protocol)
        if protocol not in self.supported:
            names = ", ".join(sorted(p.value for p in self.supported))
            raise ValueError(f"{self.kind.value} attack does not apply to {protocol.value} (supports {names})")
        self.protocol = protocol
        self.records = []

    # -- hooks driven by the protocol runners

    def forward(self, ctx: RoundContext, state: q.PureState, rng: np.random.Generator) -> q.PureState:
        """Forward leg (towards Alice). Decides engagement with an f-coin."""
        self.records.append(ctx.eve)
        if self.kind is AttackKind.NONE:
            return state
        ctx.eve.attacked = bool(rng.random() < self.f)
        if not ctx.eve.attacked:
            return state
        return _pick(ctx.eve, self.forward_branches(ctx.eve, state), rng)

    def backward(self, ctx: RoundContext, state: q.PureState, rng: np.random.Generator) -> q.PureState:
        """Backward leg (towards Bob). Only valid on engaged rounds."""
        if not ctx.eve.attacked:
            raise ContractViolation(f"backward hook called on non-engaged round {ctx.index}")
        return _pick(ctx.eve, self.backward_branches(ctx.eve, state), rng)

    # -- branch descriptions, overridden per strategy

    def forward_branches(self, eve: EveRecord, state: q.PureState) -> list[Branch]:
        return [Branch(1.0, None, state)]

    def backward_branches(self, eve: EveRecord, state: q.PureState) -> list[Branch]:
        return [Branch(1.0, None, state)]

    def describe(self) -> dict:
        return {"kind": self.kind.value, "f": self.f}


NoAttack = AttackStrategy


def _pick(eve: EveRecord, branches: list[Branch], rng: np.random.Generator) -> q.PureState:
    branches = [b for b in branches if b.prob > _TINY]
    if len(branches) == 1:
        chosen = branches[0]
    else:
        draw = rng.random()
        acc = 0.0
        chosen = branches[-1]
        for b in branches:
            acc += b.prob
            if draw < acc:
                chosen = b
                break
    if chosen.decoded is not None:
        eve.decoded = chosen.decoded
    if chosen.injected is not None:
        eve.injected = chosen.injected
    return chosen.state


class QMMAttack(AttackStrategy):
    """Quantum man in the middle.

    Forward: keep Bob's qubit (or Bob's whole pair, travel half in memory)
    and send Alice a fresh qubit Eve knows. Backward: read Alice's encoding
    off that qubit with certainty, apply the same encoding to the stored
    qubit, return it to Bob. No ancilla interaction, no resending of Bob's
    qubit on the forward leg.
    """

    kind = AttackKind.QMM
    supported = frozenset({Protocol.LM05, Protocol.PINGPONG})

    def __init__(self, f: float = 1.0, injected: str = "Z0") -> None:
        super().__init__(f)
        q.label_basis(injected)
        self.injected = injected

    def forward_branches(self, eve: EveRecord, state: q.PureState) -> list[Branch]:
        eve.stored = state
        if self.protocol is Protocol.PINGPONG:
            return [Branch(1.0, None, q.prepare_state("Psi+"), "Psi+")]
        return [Branch(1.0, None, q.prepare_state(self.injected), self.injected)]

    def backward_branches(self, eve: EveRecord, state: q.PureState) -> list[Branch]:
        if eve.stored is None:
            raise ContractViolation(f"round {eve.index}: no stored qubit to re-encode")
        out = []
        if self.protocol is Protocol.PINGPONG:
            for outcome, p in q.bell_probabilities(state).items():
                if p <= _TINY:
                    continue
                bit = PINGPONG_DECODING.get(outcome)
                if bit is None:
                    raise ContractViolation(f"round {eve.index}: Eve's own pair returned as {outcome.value}")
                out.append(Branch(p, bit, q.apply_unitary(eve.stored, PINGPONG_ENCODING[bit], [1])))
            return out
        basis, ref = q.label_basis(self.injected), q.label_bit(self.injected)
        for outcome, p, _ in q.measurement_branches(state, basis, 0):
            bit = outcome ^ ref
            out.append(Branch(p, bit, q.apply_unitary(eve.stored, LM05_ENCODING[bit], [0])))
        return out

    def describe(self) -> dict:
        return {**super().describe(), "injected": self.injected}


class InterceptResend(AttackStrategy):
    """Measure in a (random or fixed) basis and resend the collapsed state. BB84 only."""

    kind = AttackKind.INTERCEPT_RESEND
    supported = frozenset({Protocol.BB84})

    def __init__(self, f: float = 1.0, basis_policy: str = "random") -> None:
        super().__init__(f)
        policy = basis_policy.upper() if basis_policy.upper() in ("Z", "X") else basis_policy.lower()
        if policy not in ("random", "Z", "X"):
            raise ValueError(f"basis_policy must be random, Z or X, got {basis_policy!r}")
        self.basis_policy = policy

    def forward_branches(self, eve: EveRecord, state: q.PureState) -> list[Branch]:
        bases = [q.Basis.Z, q.Basis.X] if self.basis_policy == "random" else [q.Basis(self.basis_policy)]
        w = 1.0 / len(bases)
        out = []
        for basis in bases:
            for outcome, p, post in q.measurement_branches(state, basis, 0):
                out.append(Branch(w * p, outcome, post, q.bb84_label(basis, outcome)))
        return out

    def describe(self) -> dict:
        return {**super().describe(), "basis_policy": self.basis_policy}


@dataclass(frozen=True)
class LuCaiCoefficients:
    """Amplitudes of the forward-leg map
    U|0⟩|E⟩ = c00|0⟩|E00⟩ + c01|1⟩|E01⟩,  U|1⟩|E⟩ = c10|0⟩|E10⟩ + c11|1⟩|E11⟩.
    """

    c00: complex
    c01: complex
    c10: complex
    c11: complex

    def __post_init__(self) -> None:
        for row, (a, b) in (("0", (self.c00, self.c01)), ("1", (self.c10, self.c11))):
            s = abs(a) ** 2 + abs(b) ** 2
            if abs(s - 1.0) > COEFF_TOL:
                raise ValueError(f"|c{row}0|^2 + |c{row}1|^2 = {s!r}, must equal 1")


def lucai_unitary(
    c: LuCaiCoefficients,
    ancillas: Sequence[StateLike],
    initial: StateLike = "Z0",
) -> q.Unitary:
    """Two-qubit unitary on (Bob qubit ⊗ Eve ancilla) realizing the coefficient map.

    ``ancillas`` are (E00, E01, E10, E11); ``initial`` is the ancilla's
    starting state |E⟩. The images of |0⟩|E⟩ and |1⟩|E⟩ are fixed by the
    coefficients; the rest of the space is completed with an orthonormal
    basis of the complement, which the attack never reaches.
    """
    if len(ancillas) != 4:
        raise ValueError("need four ancilla states (E00, E01, E10, E11)")
    e00, e01, e10, e11 = (_as_state(a) for a in ancillas)
    for name, e in zip(("E00", "E01", "E10", "E11"), (e00, e01, e10, e11)):
        if e.num_qubits != 1:
            raise ValueError(f"ancilla {name} must be a single-qubit state")
    e = _as_state(initial).amplitudes
    zero, one = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    v0 = c.c00 * np.kron(zero, e00.amplitudes) + c.c01 * np.kron(one, e01.amplitudes)
    v1 = c.c10 * np.kron(zero, e10.amplitudes) + c.c11 * np.kron(one, e11.amplitudes)
    cross = complex(np.vdot(v0, v1))
    if abs(cross) > COEFF_TOL:
        raise ValueError(
            "images of |0>|E> and |1>|E> are not orthogonal: "
            f"conj(c00)c10<E00|E10> + conj(c01)c11<E01|E11> = {cross:.3e}, must be 0"
        )
    e_perp = np.array([-np.conj(e[1]), np.conj(e[0])])
    inputs = np.column_stack([np.kron(zero, e), np.kron(one, e), np.kron(zero, e_perp), np.kron(one, e_perp)])
    rest = null_space(np.vstack([v0.conj(), v1.conj()]))
    outputs = np.column_stack([v0, v1, rest])
    return q.Unitary(outputs @ inputs.conj().T)


def swap_parameters() -> tuple[LuCaiCoefficients, tuple[str, str, str, str]]:
    """Coefficients and ancillas for which the map is SWAP on |ψ⟩|0⟩."""
    return LuCaiCoefficients(1, 0, 1, 0), ("Z0", "Z1", "Z1", "Z0")


def identity_parameters() -> tuple[LuCaiCoefficients, tuple[str, str, str, str]]:
    return LuCaiCoefficients(1, 0, 0, 1), ("Z0", "Z0", "Z0", "Z0")


def rotation_parameters(theta: float) -> tuple[LuCaiCoefficients, tuple[str, str, str, str]]:
    """Real family c00 = c11 = cos θ, c01 = c10 = sin θ: flips Z states with probability sin²θ."""
    c, s = math.cos(theta), math.sin(theta)
    return LuCaiCoefficients(c, s, s, c), ("Z0", "Z1", "Z1", "Z0")


LUCAI_BACKWARD_MODES = ("passthrough", "ancilla_measure")


class LuCaiAttack(AttackStrategy):
    """Ancilla-unitary attack on the Bob→Alice leg of LM05.

    The model fixes only the forward interaction. What Eve does on the
    backward leg is left open, so two choices are offered: ``passthrough``
    (returning qubit untouched, no guess) and ``ancilla_measure`` (Eve
    Z-measures her ancilla and takes the outcome as her guess).
    """

    kind = AttackKind.LUCAI
    supported = frozenset({Protocol.LM05})

    def __init__(
        self,
        f: float = 1.0,
        coefficients: Optional[LuCaiCoefficients] = None,
        ancillas: Optional[Sequence[StateLike]] = None,
        initial: StateLike = "Z0",
        backward: str = "passthrough",
    ) -> None:
        super().__init__(f)
        if coefficients is None:
            coefficients, default_ancillas = swap_parameters()
            ancillas = ancillas or default_ancillas
        if ancillas is None:
            raise ValueError("ancilla states are required with explicit coefficients")
        if backward not in LUCAI_BACKWARD_MODES:
            raise ValueError(f"backward must be one of {LUCAI_BACKWARD_MODES}, got {backward!r}")
        self.coefficients = coefficients
        self.ancillas = tuple(ancillas)
        self.initial = _as_state(initial)
        self.backward_mode = backward
        self.unitary = lucai_unitary(coefficients, self.ancillas, self.initial)

    def forward_branches(self, eve: EveRecord, state: q.PureState) -> list[Branch]:
        joint = q.apply_unitary(q.tensor(state, self.initial), self.unitary, (0, 1))
        return [Branch(1.0, None, joint)]

    def backward_branches(self, eve: EveRecord, state: q.PureState) -> list[Branch]:
        if self.backward_mode == "passthrough":
            return [Branch(1.0, None, state)]
        return [Branch(p, outcome, post) for outcome, p, post in q.measurement_branches(state, q.Basis.Z, 1)]

    def describe(self) -> dict:
        return {**super().describe(), "backward": self.backward_mode}


ATTACK_CLASSES = {
    AttackKind.NONE: AttackStrategy,
    AttackKind.QMM: QMMAttack,
    AttackKind.INTERCEPT_RESEND: InterceptResend,
    AttackKind.LUCAI: LuCaiAttack,
}


def make_attack(kind: Union[str, AttackKind], f: float = 0.0, **params) -> AttackStrategy:
    kind = AttackKind(kind.upper() if isinstance(kind, str) else kind)
    if kind is AttackKind.NONE:
        if f != 0.0 or params:
            raise ValueError("the NONE strategy takes no attack fraction or parameters")
        return AttackStrategy()
    return ATTACK_CLASSES[kind](f, **params)


# -- signatures


@dataclass(frozen=True)
class ExactSignature:
    mm_qber: float
    cm_error: float
    eve_mm_accuracy: float
    f_engaged: float


@dataclass(frozen=True)
class SignatureReport:
    """Four-number fingerprint of a strategy on a two-way protocol.

    The sampled fields come from a simulated run; ``exact`` holds the
    expectation values of the same quantities computed by branch enumeration.
    ``eve_mm_accuracy`` is taken over engaged MM rounds (0 when there are none).
    """

    strategy: dict
    protocol: Protocol
    rounds: int
    mm_qber: float
    cm_error: float
    eve_mm_accuracy: float
    f_engaged: float
    exact: ExactSignature
    notes: tuple[str, ...] = field(default=())


LUCAI_NOTE = (
    "the ancilla-unitary model fixes only the forward leg; "
    "Eve's backward-path decoding mechanism is unspecified by it"
)


def exact_signature(strategy: AttackStrategy, protocol: Protocol) -> ExactSignature:
    """Expected MM QBER, matched-basis CM error and Eve's accuracy, by enumeration.

    Non-engaged rounds are error-free, so MM and CM rates scale linearly in f.
    """
    protocol = Protocol(protocol)
    strategy.begin(protocol)
    eve = EveRecord(index=-1, attacked=True)
    if strategy.kind is AttackKind.NONE:
        return ExactSignature(0.0, 0.0, 0.0, 0.0)
    mm_err = cm_err = acc = 0.0
    if protocol is Protocol.LM05:
        for prep in q.BB84_LABELS:
            basis, ref = q.label_basis(prep), q.label_bit(prep)
            for fb in strategy.forward_branches(eve, q.prepare_state(prep)):
                p = q.probabilities(fb.state, basis, 0)
                cm_err += 0.25 * fb.prob * p[1 - ref]
                for bit in (0, 1):
                    encoded = q.apply_unitary(fb.state, LM05_ENCODING[bit], [0])
                    for bb in strategy.backward_branches(eve, encoded):
                        w = 0.25 * fb.prob * 0.5 * bb.prob
                        acc += w * (bb.decoded == bit)
                        mm_err += w * q.probabilities(bb.state, basis, 0)[1 ^ ref ^ bit]
    elif protocol is Protocol.PINGPONG:
        pair = q.prepare_state("Psi+")
        for fb in strategy.forward_branches(eve, pair):
            for a_out, pa, post in q.measurement_branches(fb.state, q.Basis.Z, 1):
                home = eve.stored if eve.stored is not None else post
                cm_err += fb.prob * pa * q.probabilities(home, q.Basis.Z, 0)[a_out]
            for bit in (0, 1):
                encoded = q.apply_unitary(fb.state, PINGPONG_ENCODING[bit], [1])
                for bb in strategy.backward_branches(eve, encoded):
                    w = fb.prob * 0.5 * bb.prob
                    acc += w * (bb.decoded == bit)
                    probs = q.bell_probabilities(bb.state)
                    ok = sum(p for o, p in probs.items() if PINGPONG_DECODING.get(o) == bit)
                    mm_err += w * (1.0 - ok)
    else:
        raise ValueError("signatures are defined for the two-way protocols only")
    f = strategy.f
    return ExactSignature(f * mm_err, f * cm_err, acc if f > 0 else 0.0, f)


def signature_report(
    strategy: AttackStrategy,
    protocol: Protocol,
    rounds: int,
    rng: Optional[np.random.Generator] = None,
    cm_probability: float = 0.5,
    seed: int = 0,
) -> SignatureReport:
    """Run ``protocol`` under ``strategy`` and aggregate its signature."""
    from .protocols import ProtocolConfig, run_protocol

    protocol = Protocol(protocol)
    if protocol is Protocol.BB84:
        raise ValueError("signatures are defined for the two-way protocols only")
    if rounds < 10_000:
        raise ValueError(f"signature statistics need at least 10^4 rounds, got {rounds}")
    exact = exact_signature(strategy, protocol)
    config = ProtocolConfig(protocol, rounds, cm_probability, seed)
    transcript = run_protocol(config, strategy, rng)
    mm = [r for r in transcript.records if r.mode is Mode.MM]
    cm = [r for r in transcript.records if r.mode is Mode.CM and r.cm_error is not None]
    engaged_mm = [r for r in mm if r.attacked]
    mm_qber = sum(r.bob_decoded != r.alice_bit for r in mm) / len(mm) if mm else 0.0
    cm_error = sum(r.cm_error for r in cm) / len(cm) if cm else 0.0
    accuracy = (
        sum(r.eve_decoded == r.alice_bit for r in engaged_mm) / len(engaged_mm) if engaged_mm else 0.0
    )
    f_engaged = sum(r.attacked for r in transcript.records) / rounds
    notes = ()
    if strategy.kind is AttackKind.LUCAI:
        notes = (LUCAI_NOTE, f"backward path run as: {strategy.backward_mode}")
    return SignatureReport(
        strategy=strategy.describe(),
        protocol=protocol,
        rounds=rounds,
        mm_qber=mm_qber,
        cm_error=cm_error,
        eve_mm_accuracy=accuracy,
        f_engaged=f_engaged,
        exact=exact,
        notes=notes,
    )
