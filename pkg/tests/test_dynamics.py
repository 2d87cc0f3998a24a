import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conhist.dynamics import (
    Hamiltonian,
    PropagatorSet,
    TimeGrid,
    heisenberg,
    propagator,
    propagator_from_hamiltonian,
)
from conhist.hilbert import Ket, Operator, is_projector


def random_unitary(dim, rng):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(m)
    return Operator(q * (np.diag(r) / np.abs(np.diag(r))))


def series_expm(mat, terms=60):
    """Independent matrix-exponential oracle: scaled-and-squared power series."""
    k = max(0, int(np.ceil(np.log2(max(np.linalg.norm(mat), 1e-300)))) + 2)
    small = mat / (2**k)
    out = np.eye(mat.shape[0], dtype=complex)
    term = np.eye(mat.shape[0], dtype=complex)
    for n in range(1, terms):
        term = term @ small / n
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


class TestTimeGrid:
    def test_labels_default_to_values(self):
        grid = TimeGrid((0.0, 1.5, 3.0))
        assert grid.labels == ("t0", "t1.5", "t3")

    def test_monotonicity_enforced(self):
        with pytest.raises(ValueError):
            TimeGrid((0.0, 0.0))
        with pytest.raises(ValueError):
            TimeGrid((1.0, 0.5))


class TestPropagatorFromHamiltonian:
    def test_zero_hamiltonian(self):
        h = Hamiltonian(Operator.zero(3))
        u = propagator_from_hamiltonian(h, 2.7, 0.3)
        assert np.allclose(u.mat, np.eye(3))

    def test_sigma_z_half_turn(self):
        # eigendecomposition oracle: exp(-i pi sigma_z) = diag(e^-ipi, e^+ipi) = -I
        sigma_z = Hamiltonian(Operator(np.diag([1.0, -1.0])))
        u = propagator_from_hamiltonian(sigma_z, np.pi, 0.0)
        assert np.allclose(u.mat, -np.eye(2), atol=1e-12)

    def test_composition_against_series_oracle(self):
        rng = np.random.default_rng(7)
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        h = Hamiltonian(Operator((m + m.conj().T) / 2))
        t0, t1, t2 = 0.2, 0.9, 1.7
        u_10 = propagator_from_hamiltonian(h, t1, t0)
        u_21 = propagator_from_hamiltonian(h, t2, t1)
        u_20 = propagator_from_hamiltonian(h, t2, t0)
        assert np.linalg.norm((u_21 @ u_10).mat - u_20.mat) < 1e-10
        oracle = series_expm(-1j * (t2 - t0) * h.op.mat)
        assert np.linalg.norm(u_20.mat - oracle) < 1e-10

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            Hamiltonian(Operator(np.array([[0, 1], [0, 0]], dtype=complex)))


class TestPropagatorComposition:
    def setup_method(self):
        rng = np.random.default_rng(42)
        self.grid = TimeGrid((0, 1, 2, 3, 4, 5))
        self.steps = tuple(random_unitary(3, rng) for _ in range(5))
        self.ps = PropagatorSet(self.grid, self.steps)

    def test_identity_on_equal_indices(self):
        for j in range(6):
            assert np.array_equal(propagator(self.ps, j, j).mat, np.eye(3))

    def test_forward_composition_definition(self):
        expect = self.steps[1].mat @ self.steps[0].mat
        assert np.allclose(propagator(self.ps, 2, 0).mat, expect)

    def test_reverse_is_adjoint(self):
        fwd = propagator(self.ps, 2, 0)
        back = propagator(self.ps, 0, 2)
        assert np.allclose(back.mat, fwd.mat.conj().T)

    def test_groupoid_laws_all_triples(self):
        n = len(self.grid)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    lhs = propagator(self.ps, i, j).mat @ propagator(self.ps, j, k).mat
                    rhs = propagator(self.ps, i, k).mat
                    assert np.linalg.norm(lhs - rhs) < 1e-10

    def test_index_range(self):
        with pytest.raises(IndexError):
            propagator(self.ps, 0, 6)

    def test_non_unitary_step_rejected(self):
        with pytest.raises(ValueError):
            PropagatorSet(TimeGrid((0, 1)), (Operator(np.diag([1.0, 2.0])),))


class TestHeisenberg:
    def test_trivial_steps_fix_projectors(self):
        ps = PropagatorSet.trivial(TimeGrid((0, 1, 2)), 4)
        rng = np.random.default_rng(0)
        v = Ket(rng.normal(size=4) + 1j * rng.normal(size=4))
        p = v.projector()
        out = heisenberg(p, ps, 2, reference=0)
        assert np.allclose(out.mat, p.mat)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_output_is_projector(self, seed):
        rng = np.random.default_rng(seed)
        ps = PropagatorSet(
            TimeGrid((0, 1, 2)), (random_unitary(3, rng), random_unitary(3, rng))
        )
        v = Ket(rng.normal(size=3) + 1j * rng.normal(size=3))
        p = v.projector()
        j = int(rng.integers(0, 3))
        r = int(rng.integers(0, 3))
        out = heisenberg(p, ps, j, reference=r)
        check = is_projector(out)
        assert check.hermiticity_defect < 1e-12
        assert check.idempotency_defect < 1e-12
        # similarity transforms preserve rank (trace)
        assert out.trace().real == pytest.approx(p.rank)

    def test_hadamard_exchanges_z_and_x(self):
        # 2x2 conjugation oracle: H z+ H = x+ for the Hadamard step
        hadamard = Operator(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
        ps = PropagatorSet(TimeGrid((0, 1)), (hadamard,))
        z_plus = Ket(np.array([1, 0])).projector()
        x_plus = Ket(np.array([1, 1]) / np.sqrt(2)).projector()
        out = heisenberg(z_plus, ps, 1, reference=0)
        assert np.allclose(out.mat, x_plus.mat)
