"""Entropies, mutual information, secret fractions and transcript estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import Mode, Protocol
from .protocols import Transcript


@dataclass(frozen=True)
class SecretFraction:
    r: float
    i_e: float


@dataclass(frozen=True)
class InfoEstimates:
    qber_mm: float
    qber_cm: float
    i_ab: float
    i_ae: float
    i_be: float
    f_est: float

    def secret(self) -> SecretFraction:
        return secret_fraction(self.i_ab, self.i_ae, self.i_be)


def binary_entropy(p: float) -> float:
    """h(p) in bits, with h(0) = h(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary_entropy needs p in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def mutual_information(joint) -> float:
    """I(X;Y) in bits of the empirical 2x2 joint table (0·log 0 = 0).

    Entries may be counts or nonnegative weights.
    """
    t = np.asarray(joint, dtype=float)
    if t.shape != (2, 2):
        raise ValueError(f"joint table must be 2x2, got shape {t.shape}")
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("joint table entries must be finite and nonnegative")
    total = t.sum()
    if total <= 0:
        raise ValueError("joint table is all zeros")
    p = t / total
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mi = 0.0
    for i in range(2):
        for j in range(2):
            if p[i, j] > 0:
                mi += p[i, j] * math.log2(p[i, j] / (px[i] * py[j]))
    # rounding can leave -1e-17 on independent tables
    return min(max(mi, 0.0), 1.0)


def secret_fraction(i_ab: float, i_ae: float, i_be: float) -> SecretFraction:
    i_e = min(i_ae, i_be)
    return SecretFraction(r=i_ab - i_e, i_e=i_e)


def comment_rate(f: float) -> float:
    """Rate claimed for a QMM attack on a fraction f: I_AB = 1, I_E = f."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"f must lie in [0, 1], got {f!r}")
    return secret_fraction(1.0, f, f).r


def bb84_rate(d: float) -> float:
    """1 - 2h(D); its zero is where I_AB = 1 - h(D) meets I_AE = h(D)."""
    if not 0.0 <= d <= 0.5:
        raise ValueError(f"disturbance must lie in [0, 0.5], got {d!r}")
    return 1.0 - 2.0 * binary_entropy(d)


def critical_disturbance(
    rate_fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-5
) -> float:
    """Bisection for the sign change of ``rate_fn`` on [lo, hi]; result within ±tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if lo > hi:
        lo, hi = hi, lo
    f_lo, f_hi = rate_fn(lo), rate_fn(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError(f"rate has no sign change on [{lo}, {hi}] ({f_lo:.4g}, {f_hi:.4g})")
    while hi - lo > 2 * tol:
        mid = 0.5 * (lo + hi)
        f_mid = rate_fn(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _uniform_prior(counts: np.ndarray) -> np.ndarray:
    # Alice's bits are drawn uniformly by construction; only the channel
    # P(bob | alice) is estimated from data.
    rows = counts.sum(axis=1, keepdims=True)
    if np.any(rows == 0):
        return counts
    return 0.5 * counts / rows


def mm_counts(transcript: Transcript) -> np.ndarray:
    """2x2 table of (Alice's bit, Bob's decoded bit) over compared MM rounds.

    A ping-pong erasure lands in the disagreeing cell.
    """
    counts = np.zeros((2, 2), dtype=np.int64)
    for rec in transcript.records:
        if rec.mm_error is None:
            continue
        b = rec.bob_decoded if rec.bob_decoded is not None else 1 - rec.alice_bit
        counts[rec.alice_bit, b] += 1
    return counts


def eve_known_fraction(transcript: Transcript) -> float:
    """Fraction of MM rounds whose bit Eve decoded correctly."""
    mm = [r for r in transcript.records if r.mode is Mode.MM]
    if not mm:
        raise ValueError("transcript has no MM rounds")
    return sum(r.eve_decoded is not None and r.eve_decoded == r.alice_bit for r in mm) / len(mm)


def estimate_info(transcript: Transcript) -> InfoEstimates:
    """QBERs, mutual informations and attack-fraction estimate from a transcript.

    Two-way protocols: f_est = 2·(matched CM error), clamped to [0, 1], and
    Eve's information is f_est for both I_AE and I_BE (her copy is exact).
    BB84: QBER on sifted rounds serves as both mode rates, f_est = 4·QBER
    (intercept-resend inversion), and I_AE = I_BE = h(QBER).
    """
    counts = mm_counts(transcript)
    n_mm = int(counts.sum())
    if n_mm == 0:
        what = "sifted" if transcript.config.protocol is Protocol.BB84 else "MM"
        raise ValueError(f"transcript has no {what} comparisons")
    qber_mm = float(counts[0, 1] + counts[1, 0]) / n_mm
    i_ab = mutual_information(_uniform_prior(counts))
    if transcript.config.protocol is Protocol.BB84:
        h = binary_entropy(qber_mm)
        return InfoEstimates(qber_mm, qber_mm, i_ab, h, h, min(1.0, 4.0 * qber_mm))
    cm = [r.cm_error for r in transcript.records if r.cm_error is not None]
    if not cm:
        raise ValueError("transcript has no matched-basis CM comparisons")
    qber_cm = sum(cm) / len(cm)
    f_est = min(1.0, max(0.0, 2.0 * qber_cm))
    return InfoEstimates(qber_mm, qber_cm, i_ab, f_est, f_est, f_est)
