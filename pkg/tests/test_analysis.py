import math

import numpy as np
import pytest
from scipy.optimize import brentq

from twoway_qkd.analysis import (
    binary_entropy,
    bb84_rate,
    comment_rate,
    critical_disturbance,
    estimate_info,
    eve_known_fraction,
    mm_counts,
    mutual_information,
    secret_fraction,
)
from twoway_qkd.attacks import AttackStrategy, InterceptResend, QMMAttack
from twoway_qkd.channel import Protocol
from twoway_qkd.protocols import ProtocolConfig, run_protocol
from oracles import h2

# frozen from direct evaluation with the independent h2 oracle
H_011 = 0.499915958164528


class TestEntropy:
    def test_limits(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == 1.0

    def test_eleven_percent(self):
        assert h2(0.11) == pytest.approx(H_011, abs=1e-12)
        assert binary_entropy(0.11) == pytest.approx(0.49992, abs=1e-4)
        assert binary_entropy(0.11) == pytest.approx(H_011, abs=1e-12)

    def test_symmetry_on_grid(self):
        for p in np.linspace(0, 1, 2001):
            assert abs(binary_entropy(p) - binary_entropy(1 - p)) < 1e-12

    @pytest.mark.parametrize("p", [-0.01, 1.01, float("nan")])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            binary_entropy(p)


class TestMutualInformation:
    def test_correlated(self):
        assert mutual_information([[50, 0], [0, 50]]) == pytest.approx(1.0, abs=1e-15)

    def test_independent(self):
        assert mutual_information([[25, 25], [25, 25]]) == 0.0

    def test_zero_iff_independent(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a, b = rng.integers(1, 20, size=2)
            c, d = rng.integers(1, 20, size=2)
            outer = np.outer([a, b], [c, d])
            assert mutual_information(outer) == pytest.approx(0.0, abs=1e-12)
            bumped = outer.copy()
            bumped[0, 0] += 1
            assert mutual_information(bumped) > 0

    def test_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            mi = mutual_information(rng.integers(0, 100, size=(2, 2)) + [[1, 0], [0, 0]])
            assert 0.0 <= mi <= 1.0

    def test_bsc_sampling(self):
        rng = np.random.default_rng(2)
        n = 200_000
        x = rng.integers(0, 2, n)
        y = x ^ (rng.random(n) < 0.11)
        counts = np.zeros((2, 2), dtype=int)
        np.add.at(counts, (x, y), 1)
        assert mutual_information(counts) == pytest.approx(1 - h2(0.11), abs=0.01)
        assert 1 - h2(0.11) == pytest.approx(0.5001, abs=1e-4)

    def test_errors(self):
        with pytest.raises(ValueError):
            mutual_information([[0, 0], [0, 0]])
        with pytest.raises(ValueError):
            mutual_information([[1, -1], [0, 1]])
        with pytest.raises(ValueError):
            mutual_information([1, 2, 3])


class TestSecretFraction:
    @pytest.mark.parametrize("f", [0.0, 0.3, 1.0])
    def test_comment_rate(self, f):
        assert secret_fraction(1, f, f).r == pytest.approx(1 - f)
        assert comment_rate(f) == pytest.approx(1 - f)

    def test_examples(self):
        assert secret_fraction(1, 0, 0).r == 1
        sf = secret_fraction(0.5, 0.5, 0.7)
        assert sf.i_e == 0.5 and sf.r == 0

    def test_monotone(self):
        grid = np.linspace(0, 1, 11)
        for a in grid:
            for e1 in grid:
                for e2 in grid[:-1]:
                    base = secret_fraction(a, e1, e2).r
                    assert secret_fraction(a, e1, e2 + 0.1).r <= base + 1e-15
                    assert secret_fraction(a, e2 + 0.1, e1).r <= secret_fraction(a, e2, e1).r + 1e-15
                    assert secret_fraction(min(a + 0.1, 1.0), e1, e2).r >= base


class TestRates:
    def test_bb84_rate(self):
        assert bb84_rate(0.0) == 1.0
        assert bb84_rate(0.5) == -1.0
        assert bb84_rate(0.11) == pytest.approx(1 - 2 * H_011, abs=1e-12)
        assert 0 < bb84_rate(0.11) < 2e-4
        with pytest.raises(ValueError):
            bb84_rate(0.6)

    def test_critical_bb84(self):
        d = critical_disturbance(bb84_rate, 0.0, 0.25, 1e-5)
        assert abs(d - 0.11) <= 5e-4
        ref = brentq(lambda x: 1 - 2 * h2(x), 1e-9, 0.25, xtol=1e-12)
        assert abs(d - ref) <= 1e-5
        # same crossing written as I_AB = I_AE
        cross = critical_disturbance(lambda x: (1 - binary_entropy(x)) - binary_entropy(x), 0.0, 0.25, 1e-5)
        assert abs(d - cross) <= 1e-5

    def test_linear_roots(self):
        assert critical_disturbance(lambda f: 1 - 2 * f, 0, 1, 1e-9) == pytest.approx(0.5, abs=1e-9)
        assert critical_disturbance(lambda f: 1 - f, 0, 2, 1e-9) == pytest.approx(1.0, abs=1e-9)

    def test_no_sign_change(self):
        with pytest.raises(ValueError, match="no sign change"):
            critical_disturbance(lambda x: 1 + x, 0, 1)
        with pytest.raises(ValueError):
            critical_disturbance(lambda x: x - 0.5, 0, 1, tol=0)


class TestEstimateInfo:
    def test_qmm_full(self):
        tr = run_protocol(ProtocolConfig(Protocol.LM05, 20_000, 0.5, 1), QMMAttack(1.0))
        est = estimate_info(tr)
        assert est.qber_mm == 0 and est.i_ab == 1.0
        assert abs(est.f_est - 1.0) <= 0.02

    @pytest.mark.parametrize("protocol", [Protocol.LM05, Protocol.PINGPONG])
    def test_no_attack(self, protocol):
        est = estimate_info(run_protocol(ProtocolConfig(protocol, 5000, 0.5, 2)))
        assert est.f_est == 0 and est.i_ae == 0 and est.i_ab == 1.0
        assert est.secret().r == 1.0

    def test_fractional(self):
        n, f = 100_000, 0.4
        tr = run_protocol(ProtocolConfig(Protocol.LM05, n, 0.5, 3), QMMAttack(f))
        est = estimate_info(tr)
        assert abs(est.f_est - f) <= 0.02
        assert est.secret().r == pytest.approx(1 - est.f_est, abs=1e-15)
        # consistency at 3 sigma: f_est = 2 * mean of ~n/4 Bernoulli(f/2) draws
        n_cm = sum(r.cm_error is not None for r in tr.records)
        sigma = 2 * math.sqrt((f / 2) * (1 - f / 2) / n_cm)
        assert abs(est.f_est - f) <= 3 * sigma
        assert abs(eve_known_fraction(tr) - f) <= 0.02

    def test_symmetric_channel_identity(self):
        est = estimate_info(run_protocol(ProtocolConfig(Protocol.BB84, 40_000, seed=4), InterceptResend(1.0)))
        assert est.i_ab == pytest.approx(1 - binary_entropy(est.qber_mm), abs=5e-3)
        assert abs(est.f_est - 1.0) <= 0.04

    def test_clean_pingpong_counts(self):
        tr = run_protocol(ProtocolConfig(Protocol.PINGPONG, 200, 0.0, 5))
        counts = mm_counts(tr)
        assert counts.sum() == 200 and counts[0, 1] + counts[1, 0] == 0

    def test_empty_modes(self):
        only_cm = run_protocol(ProtocolConfig(Protocol.LM05, 50, 1.0, 6))
        with pytest.raises(ValueError, match="MM"):
            estimate_info(only_cm)
        only_mm = run_protocol(ProtocolConfig(Protocol.LM05, 50, 0.0, 6), AttackStrategy())
        with pytest.raises(ValueError, match="CM"):
            estimate_info(only_mm)
