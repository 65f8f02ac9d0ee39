import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twoway_qkd import quantum as q
from oracles import BELL, KET, SWAP

S = 1 / math.sqrt(2)


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    qm, r = np.linalg.qr(z)
    return qm * (np.diag(r) / np.abs(np.diag(r)))


def same_ray(a, b):
    return abs(abs(np.vdot(a, b)) - 1.0) < 1e-12


class TestPrepare:
    def test_z0(self):
        assert np.allclose(q.prepare_state("Z0").amplitudes, [1, 0])

    def test_x_plus(self):
        assert np.allclose(q.prepare_state("X+").amplitudes, [S, S])

    def test_psi_plus(self):
        assert np.allclose(q.prepare_state("Psi+").amplitudes, np.array([0, 1, 1, 0]) * S)

    def test_greek_aliases(self):
        assert q.prepare_state("Ψ+") is q.prepare_state("Psi+")
        assert q.prepare_state("X−") is q.prepare_state("X-")

    @pytest.mark.parametrize("label", q.PREPARATION_LABELS)
    def test_all_normalized(self, label):
        s = q.prepare_state(label)
        assert abs(s.norm() - 1) < 1e-12
        assert s.num_qubits == (2 if label[0] in "PΦΨ" else 1)

    def test_unknown_label(self):
        with pytest.raises(ValueError, match="unknown preparation"):
            q.prepare_state("Y+")

    def test_bad_length_and_norm(self):
        with pytest.raises(ValueError):
            q.PureState([1, 0, 0])
        with pytest.raises(ValueError, match="normalized"):
            q.PureState([1, 1])


class TestApplyUnitary:
    def test_iy_on_zero(self):
        # hand oracle: [[0,1],[-1,0]] @ (1,0) = (0,-1)
        out = q.apply_unitary(q.prepare_state("Z0"), q.IY, [0])
        assert np.allclose(out.amplitudes, [0, -1])

    def test_z_on_travel_qubit_of_psi_plus(self):
        out = q.apply_unitary(q.prepare_state("Psi+"), q.Z, [1])
        expected = np.kron(np.eye(2), np.diag([1, -1])) @ BELL["Psi+"]
        assert np.allclose(out.amplitudes, expected)
        assert same_ray(out.amplitudes, BELL["Psi-"])

    @pytest.mark.parametrize("label", q.PREPARATION_LABELS)
    def test_identity(self, label):
        s = q.prepare_state(label)
        targets = [0] if s.num_qubits == 1 else [0, 1]
        u = q.I if s.num_qubits == 1 else q.Unitary(np.eye(4))
        assert np.allclose(q.apply_unitary(s, u, targets).amplitudes, s.amplitudes)

    def test_embedding_on_home_qubit(self):
        rng = np.random.default_rng(5)
        u = random_unitary(rng, 2)
        psi = q.PureState(random_unitary(rng, 4)[:, 0])
        out = q.apply_unitary(psi, u, [0])
        assert np.allclose(out.amplitudes, np.kron(u, np.eye(2)) @ psi.amplitudes, atol=1e-12)

    def test_reversed_targets(self):
        rng = np.random.default_rng(6)
        u = random_unitary(rng, 4)
        psi = q.PureState(random_unitary(rng, 4)[:, 0])
        out = q.apply_unitary(psi, u, (1, 0))
        assert np.allclose(out.amplitudes, SWAP @ u @ SWAP @ psi.amplitudes, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            q.apply_unitary(q.prepare_state("Z0"), q.SWAP, [0, 1])
        with pytest.raises(ValueError):
            q.apply_unitary(q.prepare_state("Psi+"), q.SWAP, [0])
        with pytest.raises(ValueError):
            q.apply_unitary(q.prepare_state("Z0"), q.X, [1])

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError, match="not unitary"):
            q.Unitary([[1, 0], [0, 1 + 1e-9]])
        with pytest.raises(ValueError, match="not unitary"):
            q.Unitary(np.ones((4, 4)))

    def test_accepts_within_tolerance(self):
        q.Unitary([[1, 0], [0, 1 + 1e-12]])


class TestMeasure:
    def test_eigenstate(self):
        outcome, post, p = q.measure(q.prepare_state("Z0"), q.Basis.Z, 0, 0.999)
        assert (outcome, p) == (0, 1.0)
        assert np.allclose(post.amplitudes, [1, 0])

    def test_plus_in_z(self):
        p0, p1 = q.probabilities(q.prepare_state("X+"), q.Basis.Z)
        assert p0 == pytest.approx(0.5, abs=1e-15) and p1 == pytest.approx(0.5, abs=1e-15)
        assert q.measure(q.prepare_state("X+"), q.Basis.Z, 0, 0.49)[0] == 0
        assert q.measure(q.prepare_state("X+"), q.Basis.Z, 0, 0.51)[0] == 1

    def test_x_basis_outcomes(self):
        assert q.measure(q.prepare_state("X-"), q.Basis.X, 0, 0.0)[0] == 1
        _, post, _ = q.measure(q.prepare_state("Z1"), q.Basis.X, 0, 0.1)
        assert same_ray(post.amplitudes, KET["X+"])

    def test_psi_plus_collapse(self):
        # projection oracle: (|0><0| ⊗ I) Ψ+ renormalized = |0>|1>
        outcome, post, p = q.measure(q.prepare_state("Psi+"), q.Basis.Z, 0, 0.2)
        proj = np.kron(np.diag([1, 0]), np.eye(2)) @ BELL["Psi+"]
        assert outcome == 0 and p == pytest.approx(0.5)
        assert np.allclose(post.amplitudes, proj / np.linalg.norm(proj))
        assert q.probabilities(post, q.Basis.Z, 1) == pytest.approx((0.0, 1.0))

    def test_draw_validation(self):
        with pytest.raises(ValueError):
            q.measure(q.prepare_state("Z0"), q.Basis.Z, 0, 1.0)
        with pytest.raises(ValueError):
            q.measure(q.prepare_state("Z0"), q.Basis.Z, 1, 0.5)


class TestBellMeasure:
    def test_eigenstate(self):
        assert q.bell_measure(q.prepare_state("Psi+"), 0.99) == (q.BellOutcome.PSI_PLUS, pytest.approx(1.0))

    def test_z_encoded(self):
        s = q.apply_unitary(q.prepare_state("Psi+"), q.Z, [1])
        assert q.bell_measure(s, 0.3)[0] is q.BellOutcome.PSI_MINUS

    def test_product_state(self):
        zz = q.tensor(q.prepare_state("Z0"), q.prepare_state("Z0"))
        probs = q.bell_probabilities(zz)
        expected = {b: abs(np.vdot(BELL[b.value], np.kron(KET["Z0"], KET["Z0"]))) ** 2 for b in q.BellOutcome}
        for b in q.BellOutcome:
            assert probs[b] == pytest.approx(expected[b], abs=1e-15)
        assert probs[q.BellOutcome.PHI_PLUS] == pytest.approx(0.5)
        assert probs[q.BellOutcome.PHI_MINUS] == pytest.approx(0.5)

    def test_single_qubit_rejected(self):
        with pytest.raises(ValueError):
            q.bell_measure(q.prepare_state("Z0"), 0.5)


unitary_seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestInvariants:
    @settings(max_examples=60, deadline=None)
    @given(seed=unitary_seeds, steps=st.integers(1, 12))
    def test_norm_preserved_over_sequences(self, seed, steps):
        rng = np.random.default_rng(seed)
        state = q.prepare_state(q.PREPARATION_LABELS[seed % len(q.PREPARATION_LABELS)])
        for _ in range(steps):
            if state.num_qubits == 1:
                state = q.apply_unitary(state, random_unitary(rng, 2), [0])
            elif rng.random() < 0.5:
                state = q.apply_unitary(state, random_unitary(rng, 4), [0, 1])
            else:
                state = q.apply_unitary(state, random_unitary(rng, 2), [int(rng.integers(2))])
            assert abs(state.norm() - 1) < 1e-12

    @settings(max_examples=60, deadline=None)
    @given(seed=unitary_seeds, dim=st.sampled_from([2, 4]))
    def test_composition(self, seed, dim):
        rng = np.random.default_rng(seed)
        u1, u2 = q.Unitary(random_unitary(rng, dim)), q.Unitary(random_unitary(rng, dim))
        s = q.PureState(random_unitary(rng, dim)[:, 0])
        targets = [0] if dim == 2 else [0, 1]
        two_step = q.apply_unitary(q.apply_unitary(s, u1, targets), u2, targets)
        one_step = q.apply_unitary(s, u2 @ u1, targets)
        assert np.max(np.abs(two_step.amplitudes - one_step.amplitudes)) < 1e-12

    @settings(max_examples=40, deadline=None)
    @given(seed=unitary_seeds, dim=st.sampled_from([2, 4]), eps=st.floats(1e-8, 1e-2))
    def test_unitarity_check_rejects_perturbations(self, seed, dim, eps):
        m = random_unitary(np.random.default_rng(seed), dim).copy()
        m[0, 0] += eps
        if np.max(np.abs(m.conj().T @ m - np.eye(dim))) > 1e-10:
            with pytest.raises(ValueError):
                q.Unitary(m)

    @pytest.mark.parametrize(
        "label, basis, target",
        [("X+", q.Basis.Z, 0), ("Z0", q.Basis.X, 0), ("Psi+", q.Basis.Z, 1), ("Phi-", q.Basis.X, 0)],
    )
    def test_born_frequencies(self, label, basis, target):
        state = q.prepare_state(label)
        if state.num_qubits == 2:
            state = q.apply_unitary(state, q.Unitary(random_unitary(np.random.default_rng(11), 2)), [target])
        p0, _ = q.probabilities(state, basis, target)
        n = 100_000
        draws = np.random.default_rng(12).random(n)
        zeros = sum(q.measure(state, basis, target, d)[0] == 0 for d in draws)
        sigma = math.sqrt(n * p0 * (1 - p0))
        assert abs(zeros - n * p0) <= 3 * sigma

    def test_bell_born_frequencies(self):
        state = q.PureState(random_unitary(np.random.default_rng(3), 4)[:, 1])
        probs = q.bell_probabilities(state)
        assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)
        n = 100_000
        tally = {b: 0 for b in q.BellOutcome}
        for d in np.random.default_rng(4).random(n):
            tally[q.bell_measure(state, d)[0]] += 1
        for b, p in probs.items():
            assert abs(tally[b] - n * p) <= 3 * math.sqrt(n * p * (1 - p))
