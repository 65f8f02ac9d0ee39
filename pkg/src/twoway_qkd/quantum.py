"""Exact state-vector arithmetic for one- and two-qubit systems.

Two-qubit amplitudes are ordered qubit-0 ⊗ qubit-1, i.e. amplitude index
``2*b0 + b1``. Qubit 0 is always the "home" qubit (the one that stays with
whoever prepared the pair) and qubit 1 the one that travels.

Nothing in here owns randomness: measurements take a uniform draw in [0, 1)
supplied by the caller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from enum import Enum
from typing import Optional, Sequence

import numpy as np

NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
_ZERO_PROB = 1e-15

_SQRT1_2 = 1 / math.sqrt(2)


class Basis(str, Enum):
    Z = "Z"
    X = "X"


class BellOutcome(str, Enum):
    PHI_PLUS = "Phi+"
    PHI_MINUS = "Phi-"
    PSI_PLUS = "Psi+"
    PSI_MINUS = "Psi-"


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector of length 2 (one qubit) or 4 (two qubits)."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size not in (2, 4):
            raise ValueError(f"state must have 2 or 4 amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return 1 if self.amplitudes.size == 2 else 2

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def __repr__(self) -> str:
        return f"PureState({np.array2string(self.amplitudes, precision=4)})"


@dataclass(frozen=True, eq=False)
class Unitary:
    """A 2x2 or 4x4 unitary matrix; construction checks U†U = I."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape not in ((2, 2), (4, 4)):
            raise ValueError(f"unitary must be 2x2 or 4x4, got shape {m.shape}")
        dev = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if dev > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary: max |U†U - I| = {dev:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def num_qubits(self) -> int:
        return 1 if self.matrix.shape[0] == 2 else 2

    def __matmul__(self, other: Unitary) -> Unitary:
        return Unitary(self.matrix @ other.matrix)

    def dagger(self) -> Unitary:
        return Unitary(self.matrix.conj().T)


I = Unitary(np.eye(2))
X = Unitary([[0, 1], [1, 0]])
Y = Unitary([[0, -1j], [1j, 0]])
Z = Unitary([[1, 0], [0, -1]])
IY = Unitary([[0, 1], [-1, 0]])  # i·Y, real; flips both Z and X eigenstates
H = Unitary(np.array([[1, 1], [1, -1]]) * _SQRT1_2)
SWAP = Unitary([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
CNOT = Unitary([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])

_BELL_VECTORS = {
    BellOutcome.PHI_PLUS: np.array([1, 0, 0, 1]) * _SQRT1_2,
    BellOutcome.PHI_MINUS: np.array([1, 0, 0, -1]) * _SQRT1_2,
    BellOutcome.PSI_PLUS: np.array([0, 1, 1, 0]) * _SQRT1_2,
    BellOutcome.PSI_MINUS: np.array([0, 1, -1, 0]) * _SQRT1_2,
}

_PREPARATIONS = {
    "Z0": PureState([1, 0]),
    "Z1": PureState([0, 1]),
    "X+": PureState([_SQRT1_2, _SQRT1_2]),
    "X-": PureState([_SQRT1_2, -_SQRT1_2]),
    **{b.value: PureState(v) for b, v in _BELL_VECTORS.items()},
}
_ALIASES = {
    "X−": "X-",
    "Φ+": "Phi+",
    "Φ−": "Phi-",
    "Φ-": "Phi-",
    "Ψ+": "Psi+",
    "Ψ−": "Psi-",
    "Ψ-": "Psi-",
}

PREPARATION_LABELS = tuple(_PREPARATIONS)
BB84_LABELS = ("Z0", "Z1", "X+", "X-")


def prepare_state(label: str) -> PureState:
    """Return the state named by ``label`` (Z0, Z1, X+, X-, Phi±, Psi±)."""
    key = _ALIASES.get(label, label)
    try:
        return _PREPARATIONS[key]
    except KeyError:
        raise ValueError(f"unknown preparation label {label!r}") from None


def label_basis(label: str) -> Basis:
    """Basis of a single-qubit BB84 label."""
    key = _ALIASES.get(label, label)
    if key not in BB84_LABELS:
        raise ValueError(f"{label!r} is not a single-qubit BB84 label")
    return Basis.Z if key[0] == "Z" else Basis.X


def label_bit(label: str) -> int:
    """Measurement outcome that a BB84 label yields in its own basis."""
    key = _ALIASES.get(label, label)
    if key not in BB84_LABELS:
        raise ValueError(f"{label!r} is not a single-qubit BB84 label")
    return 0 if key in ("Z0", "X+") else 1


def bb84_label(basis: Basis, bit: int) -> str:
    if basis is Basis.Z:
        return "Z0" if bit == 0 else "Z1"
    return "X+" if bit == 0 else "X-"


def tensor(a: PureState, b: PureState) -> PureState:
    if a.num_qubits != 1 or b.num_qubits != 1:
        raise ValueError("tensor() joins two single-qubit states")
    return _tensor_cached(a.amplitudes.tobytes(), b.amplitudes.tobytes())


@lru_cache(maxsize=4096)
def _tensor_cached(a: bytes, b: bytes) -> PureState:
    return PureState(np.kron(np.frombuffer(a, dtype=complex), np.frombuffer(b, dtype=complex)))


def overlap(a: PureState, b: PureState) -> float:
    """|⟨a|b⟩|, insensitive to global phase."""
    if a.amplitudes.size != b.amplitudes.size:
        raise ValueError("states have different dimensions")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def _check_target(state: PureState, target: int) -> None:
    if target not in range(state.num_qubits):
        raise ValueError(f"target {target} invalid for a {state.num_qubits}-qubit state")


def _apply_1q(psi: np.ndarray, m: np.ndarray, target: int) -> np.ndarray:
    if psi.size == 2:
        return m @ psi
    t = psi.reshape(2, 2)
    out = m @ t if target == 0 else t @ m.T
    return out.reshape(4)


def apply_unitary(state: PureState, u: Unitary, targets: Sequence[int]) -> PureState:
    """Apply ``u`` to the listed qubits of ``state``.

    A 2x2 matrix acting on one qubit of a pair is embedded with the identity
    on the other qubit. A 4x4 matrix needs both qubits; ``targets=(1, 0)``
    applies it with the qubit roles exchanged.
    """
    if not isinstance(u, Unitary):
        u = Unitary(u)
    targets = tuple(targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate targets {targets}")
    if 2 ** len(targets) != u.matrix.shape[0]:
        raise ValueError(
            f"{u.matrix.shape[0]}x{u.matrix.shape[0]} matrix cannot act on targets {targets}"
        )
    for t in targets:
        _check_target(state, t)
    return _apply_cached(state.amplitudes.tobytes(), u, targets)


# States and unitaries are immutable and the protocols revisit a handful of
# states millions of times, so results are memoized on the raw amplitudes.
# Unitary hashes by identity.
@lru_cache(maxsize=16384)
def _apply_cached(raw: bytes, u: Unitary, targets: tuple[int, ...]) -> PureState:
    psi = np.frombuffer(raw, dtype=complex)
    if len(targets) == 1:
        return PureState(_apply_1q(psi, u.matrix, targets[0]))
    m = u.matrix
    if targets == (1, 0):
        m = SWAP.matrix @ m @ SWAP.matrix
    return PureState(m @ psi)


@lru_cache(maxsize=16384)
def _measure_table(
    raw: bytes, basis: Basis, target: int
) -> tuple[tuple[float, float], tuple[Optional[PureState], Optional[PureState]]]:
    """Outcome probabilities and renormalized post-states for one qubit."""
    psi = np.frombuffer(raw, dtype=complex)
    if basis is Basis.X:
        psi = _apply_1q(psi, H.matrix, target)
    if psi.size == 2:
        comps = (psi[:1], psi[1:])
    else:
        t = psi.reshape(2, 2)
        comps = (t[0], t[1]) if target == 0 else (t[:, 0], t[:, 1])
    probs = tuple(float(np.vdot(c, c).real) for c in comps)
    posts = []
    for outcome, p in enumerate(probs):
        if p <= _ZERO_PROB:
            posts.append(None)
            continue
        post = np.zeros(psi.size, dtype=complex)
        if psi.size == 2:
            post[outcome] = psi[outcome]
        else:
            view = post.reshape(2, 2)
            if target == 0:
                view[outcome, :] = comps[outcome]
            else:
                view[:, outcome] = comps[outcome]
        post = post / math.sqrt(p)
        if basis is Basis.X:
            post = _apply_1q(post, H.matrix, target)
        posts.append(PureState(post))
    return probs, tuple(posts)


def probabilities(state: PureState, basis: Basis, target: int = 0) -> tuple[float, float]:
    """Born probabilities of outcomes 0 and 1 (for X: 0 = |+⟩, 1 = |−⟩)."""
    _check_target(state, target)
    return _measure_table(state.amplitudes.tobytes(), Basis(basis), target)[0]


def _check_draw(draw: float) -> None:
    if not 0.0 <= draw < 1.0:
        raise ValueError(f"random draw must lie in [0, 1), got {draw!r}")


def measure(
    state: PureState, basis: Basis, target: int, draw: float
) -> tuple[int, PureState, float]:
    """Projective measurement of one qubit.

    Returns ``(outcome, post_state, probability)``. The outcome is 0 when
    ``draw < p0``. The post-measurement state is the renormalized projection,
    expressed back in the computational frame.
    """
    _check_target(state, target)
    _check_draw(draw)
    probs, posts = _measure_table(state.amplitudes.tobytes(), Basis(basis), target)
    outcome = 0 if draw < probs[0] else 1
    if posts[outcome] is None:
        outcome = 1 - outcome
    return outcome, posts[outcome], probs[outcome]


def measurement_branches(
    state: PureState, basis: Basis, target: int = 0
) -> list[tuple[int, float, PureState]]:
    """All outcomes with nonzero probability as ``(outcome, probability, post_state)``."""
    _check_target(state, target)
    probs, posts = _measure_table(state.amplitudes.tobytes(), Basis(basis), target)
    return [(o, probs[o], posts[o]) for o in (0, 1) if posts[o] is not None]


@lru_cache(maxsize=16384)
def _bell_table(raw: bytes) -> dict[BellOutcome, float]:
    psi = np.frombuffer(raw, dtype=complex)
    return {b: float(abs(np.vdot(v, psi)) ** 2) for b, v in _BELL_VECTORS.items()}


def bell_probabilities(state: PureState) -> dict[BellOutcome, float]:
    if state.num_qubits != 2:
        raise ValueError("Bell measurement needs a two-qubit state")
    return dict(_bell_table(state.amplitudes.tobytes()))


def bell_measure(state: PureState, draw: float) -> tuple[BellOutcome, float]:
    """Sample a Bell-basis outcome (ordered Φ+, Φ−, Ψ+, Ψ−) by the Born rule."""
    if state.num_qubits != 2:
        raise ValueError("Bell measurement needs a two-qubit state")
    _check_draw(draw)
    probs = _bell_table(state.amplitudes.tobytes())
    acc = 0.0
    last = None
    for outcome, p in probs.items():
        if p <= _ZERO_PROB:
            continue
        last = outcome
        acc += p
        if draw < acc:
            return outcome, p
    # draw landed in the rounding slack above the cumulative sum
    return last, probs[last]
