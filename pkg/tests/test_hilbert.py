import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conhist.hilbert import (
    DecompositionOfIdentity,
    DensityOperator,
    DimensionMismatchError,
    Ket,
    Operator,
    Projector,
    is_projector,
    op_inner,
    projector_onto_span,
    rho_inner,
    tensor_product,
    validate_decomposition,
)

RNG = np.random.default_rng(1234)


def random_operator(dim, rng=RNG):
    return Operator(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))


def random_ket(dim, rng=RNG):
    return Ket(rng.normal(size=dim) + 1j * rng.normal(size=dim))


Z_PLUS = Ket(np.array([1, 0]), "z+")
Z_MINUS = Ket(np.array([0, 1]), "z-")
X_PLUS = Ket(np.array([1, 1]) / np.sqrt(2), "x+")
X_MINUS = Ket(np.array([1, -1]) / np.sqrt(2), "x-")


class TestTensorProduct:
    def test_identity_times_identity(self):
        out = tensor_product(Operator.identity(2), Operator.identity(2))
        assert np.allclose(out.mat, np.eye(4))

    def test_rank_multiplies(self):
        p = tensor_product(Z_PLUS.projector().op, Operator.identity(3))
        assert Projector(p).rank == 3

    def test_index_expansion_oracle(self):
        # Oracle: walk every output entry by the index formula.
        a = random_operator(2)
        b = random_operator(3)
        out = tensor_product(a, b)
        for i in range(2):
            for j in range(2):
                for k in range(3):
                    for l in range(3):
                        assert out.mat[i * 3 + k, j * 3 + l] == pytest.approx(
                            a.mat[i, j] * b.mat[k, l]
                        )
        # spot check one off-diagonal entry: (3, 4) = a[1,1] * b[0,1]
        assert out.mat[3, 4] == pytest.approx(a.mat[1, 1] * b.mat[0, 1])

    def test_associativity(self):
        a, b, c = random_operator(2), random_operator(3), random_operator(2)
        left = tensor_product(tensor_product(a, b), c)
        right = tensor_product(a, tensor_product(b, c))
        assert np.linalg.norm(left.mat - right.mat) < 1e-14


class TestOpInner:
    def test_identity_trace(self):
        for d in (1, 2, 5):
            assert op_inner(Operator.identity(d), Operator.identity(d)) == pytest.approx(d)

    def test_spin_eigenprojector_overlap(self):
        # |<z+|x+>|^2 = 1/2 with |x+> = (|z+> + |z->)/sqrt(2)
        val = op_inner(Z_PLUS.projector().op, X_PLUS.projector().op)
        assert val == pytest.approx(0.5)

    def test_conjugate_symmetry_bruteforce(self):
        for _ in range(20):
            a, b = random_operator(4), random_operator(4)
            lhs = op_inner(a, b)
            # oracle: entrywise double sum of conj(a) * b
            direct = sum(
                a.mat[i, j].conjugate() * b.mat[i, j] for i in range(4) for j in range(4)
            )
            assert lhs == pytest.approx(direct)
            assert op_inner(b, a) == pytest.approx(lhs.conjugate())

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            op_inner(Operator.identity(2), Operator.identity(3))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_positive_definiteness(self, seed):
        rng = np.random.default_rng(seed)
        a = random_operator(4, rng)
        val = op_inner(a, a)
        assert val.real >= 0
        assert abs(val.imag) < 1e-12 * a.norm() ** 2


class TestRhoInner:
    def test_maximally_mixed_reduces_to_op_inner(self):
        rho = DensityOperator.maximally_mixed(3)
        a, b = random_operator(3), random_operator(3)
        assert rho_inner(rho, a, b) == pytest.approx(op_inner(a, b) / 3)

    def test_pure_state_expansion_oracle(self):
        psi = random_ket(3).normalized()
        rho = DensityOperator.from_ket(psi)
        a, b = random_operator(3), random_operator(3)
        # oracle: <psi| a^dag b |psi> by direct vector algebra
        direct = np.vdot(a.mat @ psi.amps, b.mat @ psi.amps)
        assert rho_inner(rho, a, b) == pytest.approx(direct)

    def test_unit_trace(self):
        rho = DensityOperator.from_ket(random_ket(4).normalized())
        i4 = Operator.identity(4)
        assert rho_inner(rho, i4, i4) == pytest.approx(1.0)


class TestIsProjector:
    def test_identity(self):
        assert is_projector(Operator.identity(2))

    def test_rank_one(self):
        assert is_projector(Z_PLUS.projector().op)

    def test_pauli_x_fails(self):
        pauli_x = Operator(np.array([[0, 1], [1, 0]], dtype=complex))
        check = is_projector(pauli_x)
        assert not check
        # X^2 = I, so the idempotency defect is ||X - I||
        assert check.idempotency_defect == pytest.approx(
            np.linalg.norm(pauli_x.mat - np.eye(2))
        )
        assert check.hermiticity_defect == pytest.approx(0.0)


class TestValidateDecomposition:
    def test_z_basis_valid(self):
        dec = DecompositionOfIdentity.from_basis([Z_PLUS, Z_MINUS], ["z+", "z-"])
        report = validate_decomposition(dec)
        assert report.valid

    def test_mismatched_members_invalid(self):
        # z+ and x- do not sum to I: defect ||z+ + x- - I|| = ||z+ - x+|| = 1
        total = Z_PLUS.projector().mat + X_MINUS.projector().mat
        defect = np.linalg.norm(total - np.eye(2))
        assert defect > 0.5
        with pytest.raises(ValueError):
            DecompositionOfIdentity(
                (("z+", Z_PLUS.projector()), ("x-", X_MINUS.projector()))
            )

    def test_single_member_identity(self):
        dec = DecompositionOfIdentity.trivial(3)
        assert validate_decomposition(dec).valid

    def test_refinement_by_splitting_member_stays_valid(self):
        # split the identity member of {I} into the z basis
        dec = DecompositionOfIdentity.trivial(2)
        refined = dec.refine_member(
            "I", (("z+", Z_PLUS.projector()), ("z-", Z_MINUS.projector()))
        )
        assert validate_decomposition(refined).valid

    def test_label_rules(self):
        with pytest.raises(ValueError):
            DecompositionOfIdentity(
                (("a", Z_PLUS.projector()), ("a", Z_MINUS.projector()))
            )
        with pytest.raises(ValueError):
            DecompositionOfIdentity((("a,b", Projector.identity(2)),))


class TestProjectorOntoSpan:
    def test_single_ket(self):
        p = projector_onto_span([Z_PLUS])
        assert np.allclose(p.mat, [[1, 0], [0, 0]])

    def test_full_basis_gives_identity(self):
        p = projector_onto_span([Z_PLUS, Z_MINUS])
        assert np.allclose(p.mat, np.eye(2))

    def test_two_independent_kets_gram_schmidt_oracle(self):
        # Gram-Schmidt oracle: orthonormalize {z+, x+} by hand and sum outer
        # products; two independent vectors in dimension 2 span everything.
        v1 = Z_PLUS.amps
        v2 = X_PLUS.amps - np.vdot(v1, X_PLUS.amps) * v1
        v2 = v2 / np.linalg.norm(v2)
        oracle = np.outer(v1, v1.conj()) + np.outer(v2, v2.conj())
        p = projector_onto_span([Z_PLUS, X_PLUS])
        assert np.allclose(p.mat, oracle)
        assert np.allclose(p.mat, np.eye(2))
        assert p.rank == 2

    def test_dependent_kets_rank(self):
        p = projector_onto_span([Z_PLUS, Ket(2 * Z_PLUS.amps)])
        assert p.rank == 1

    def test_zero_input_rejected(self):
        with pytest.raises(ValueError):
            projector_onto_span([Ket(np.zeros(2))])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 4), st.integers(2, 6))
    def test_output_is_projector(self, seed, n_kets, dim):
        rng = np.random.default_rng(seed)
        kets = [random_ket(dim, rng) for _ in range(n_kets)]
        p = projector_onto_span(kets)
        check = is_projector(p.op)
        assert check.hermiticity_defect < 1e-9
        assert check.idempotency_defect < 1e-9


class TestInvariantguards:
    def test_ket_finiteness(self):
        with pytest.raises(ValueError):
            Ket(np.array([np.inf, 0]))

    def test_operator_finiteness(self):
        with pytest.raises(ValueError):
            Operator(np.array([[np.nan, 0], [0, 1]]))

    def test_density_operator_invariants(self):
        with pytest.raises(ValueError):
            DensityOperator(Operator(np.diag([0.7, 0.7])))  # trace 1.4
        with pytest.raises(ValueError):
            DensityOperator(Operator(np.diag([1.5, -0.5])))  # negative eigenvalue

    def test_projector_trace_is_rank(self):
        p = projector_onto_span([random_ket(5), random_ket(5)])
        assert p.rank == 2
        assert p.op.trace().real == pytest.approx(2.0)

    def test_operators_are_immutable(self):
        op = Operator.identity(2)
        with pytest.raises(ValueError):
            op.mat[0, 0] = 5.0
