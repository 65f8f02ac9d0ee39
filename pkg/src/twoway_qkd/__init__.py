"""Exact simulator of two-way QKD (LM05, ping-pong) and BB84 under eavesdropping attacks."""

__version__ = "0.1.0"

from .analysis import (
    InfoEstimates,
    SecretFraction,
    bb84_rate,
    binary_entropy,
    comment_rate,
    critical_disturbance,
    estimate_info,
    mutual_information,
    secret_fraction,
)
from .attacks import (
    AttackKind,
    AttackStrategy,
    InterceptResend,
    LuCaiAttack,
    LuCaiCoefficients,
    QMMAttack,
    SignatureReport,
    lucai_unitary,
    make_attack,
    signature_report,
)
from .channel import Mode, Protocol
from .privacy import EveKnowledge, PAReport, eve_guess_probability, pa_experiment, toeplitz_hash
from .protocols import ProtocolConfig, RoundRecord, Transcript, run_bb84, run_lm05, run_pingpong, run_protocol
from .quantum import Basis, BellOutcome, PureState, Unitary, apply_unitary, bell_measure, measure, prepare_state
