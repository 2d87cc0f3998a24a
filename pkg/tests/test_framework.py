import numpy as np
import pytest

from conhist.dynamics import PropagatorSet, TimeGrid
from conhist.framework import (
    CLASS_COMMON,
    CLASS_DYNAMIC,
    CLASS_IDENTICAL,
    CLASS_KINEMATIC,
    CLASS_REFINEMENT,
    FamilyMismatchError,
    KinematicWitness,
    common_refinement,
    extend,
    is_compatible,
    is_refinement,
)
from conhist.hilbert import DecompositionOfIdentity, Ket, Operator, projector_onto_span
from conhist.histories import Family, weight_table

Z_PLUS = Ket(np.array([1, 0]), "z+")
Z_MINUS = Ket(np.array([0, 1]), "z-")
X_PLUS = Ket(np.array([1, 1]) / np.sqrt(2), "x+")
X_MINUS = Ket(np.array([1, -1]) / np.sqrt(2), "x-")

Z_DEC = DecompositionOfIdentity.from_basis([Z_PLUS, Z_MINUS], ["z+", "z-"])
X_DEC = DecompositionOfIdentity.from_basis([X_PLUS, X_MINUS], ["x+", "x-"])
IDENT = DecompositionOfIdentity.trivial(2)


@pytest.fixture
def ps():
    return PropagatorSet.trivial(TimeGrid((0, 1, 2, 3)), 2)


def same_weights(a, b):
    def stripped(fam):
        out = {}
        for alpha, w in weight_table(fam).entries:
            if w > 1e-12:
                out[tuple(x for x in alpha if x != "I")] = w
        return out

    ta, tb = stripped(a), stripped(b)
    return set(ta) == set(tb) and all(abs(ta[k] - tb[k]) < 1e-12 for k in ta)


class TestExtend:
    def test_identity_insertion_preserves_weights(self, ps):
        fam = Family.pure(ps, (0, 1, 3), Z_PLUS, [X_DEC, X_DEC], name="F")
        ext = extend(fam, [2.0])
        assert ext.time_indices == (0, 1, 2, 3)
        assert same_weights(fam, ext)

    def test_extend_unitary_family_support_unchanged(self, ps):
        zdec = DecompositionOfIdentity.from_projector(Z_PLUS.projector(), "z+")
        fam = Family.pure(ps, (0, 1), Z_PLUS, [zdec])
        ext = extend(fam, [2.0, 3.0])
        from conhist.histories import support

        sup = support(ext)
        assert len(sup) == 1
        assert sup[0][1] == pytest.approx(1.0)

    def test_duplicate_time_rejected(self, ps):
        fam = Family.pure(ps, (0, 1), Z_PLUS, [X_DEC])
        with pytest.raises(ValueError):
            extend(fam, [1.0])

    def test_unknown_time_rejected(self, ps):
        fam = Family.pure(ps, (0, 1), Z_PLUS, [X_DEC])
        with pytest.raises(KeyError):
            extend(fam, [1.5])

    def test_extend_commutes(self, ps):
        fam = Family.pure(ps, (0, 1), Z_PLUS, [X_DEC])
        ab = extend(extend(fam, [2.0]), [3.0])
        ba = extend(extend(fam, [3.0]), [2.0])
        assert ab.time_indices == ba.time_indices
        assert same_weights(ab, ba)

    def test_extend_before_pure_initial_rejected(self, ps):
        fam = Family.pure(ps, (1, 2), Z_PLUS, [X_DEC])
        with pytest.raises(ValueError):
            extend(fam, [0.0])

    def test_splitting_zero_weight_member_preserves_probabilities(self):
        # the member orthogonal to the initial state carries no weight, so
        # splitting it must leave every positive probability unchanged
        from conhist.hilbert import projector_onto_span
        from conhist.histories import consistency_check, probabilities

        dim3 = PropagatorSet.trivial(TimeGrid((0, 1, 2)), 3)
        e = [Ket(np.eye(3)[:, k]) for k in range(3)]
        psi = Ket(np.eye(3)[:, 0], "psi")
        coarse_dec = DecompositionOfIdentity(
            (("occupied", e[0].projector()), ("empty", projector_onto_span(e[1:]))),
        )
        fine_dec = coarse_dec.refine_member(
            "empty", (("e1", e[1].projector()), ("e2", e[2].projector()))
        )
        fam_c = Family.pure(dim3, (0, 1, 2), psi, [coarse_dec, coarse_dec])
        fam_f = Family.pure(dim3, (0, 1, 2), psi, [fine_dec, fine_dec])
        assert is_refinement(fam_c, fam_f)
        assert consistency_check(fam_c).consistent
        assert consistency_check(fam_f).consistent
        pc = {a: p for a, p in probabilities(fam_c).items() if p > 1e-12}
        pf = {a: p for a, p in probabilities(fam_f).items() if p > 1e-12}
        assert pc == {("psi", "occupied", "occupied"): pytest.approx(1.0)}
        assert pf == {("psi", "occupied", "occupied"): pytest.approx(1.0)}

    def test_extend_then_refine_reproduces_delayed_split(self, ps):
        # extending the split family and refining the new identity slot with
        # the x basis rebuilds the delayed-split structure
        f1 = Family.pure(ps, (0, 1), Z_PLUS, [X_DEC])
        ext = extend(f1, [2.0])
        refined = Family.pure(ps, (0, 1, 2), Z_PLUS, [X_DEC, X_DEC])
        assert is_refinement(ext, refined)


class TestIsRefinement:
    def test_reflexive(self, ps):
        fam = Family.pure(ps, (0, 1, 2), Z_PLUS, [X_DEC, Z_DEC])
        assert is_refinement(fam, fam)

    def test_identity_refined_by_basis(self, ps):
        coarse = Family.pure(ps, (0, 1), Z_PLUS, [IDENT])
        fine = Family.pure(ps, (0, 1), Z_PLUS, [Z_DEC])
        assert is_refinement(coarse, fine)
        assert not is_refinement(fine, coarse)

    def test_incompatible_bases_are_not_refinements(self, ps):
        f = Family.pure(ps, (0, 1), Z_PLUS, [Z_DEC])
        g = Family.pure(ps, (0, 1), Z_PLUS, [X_DEC])
        assert not is_refinement(f, g)
        assert not is_refinement(g, f)

    def test_transitive(self, ps):
        dim4 = PropagatorSet.trivial(TimeGrid((0, 1)), 4)
        basis = [Ket(np.eye(4)[:, k]) for k in range(4)]
        full = DecompositionOfIdentity.from_basis(basis, ["a", "b", "c", "d"])
        halves = DecompositionOfIdentity(
            (
                ("ab", projector_onto_span(basis[:2])),
                ("cd", projector_onto_span(basis[2:])),
            )
        )
        ident4 = DecompositionOfIdentity.trivial(4)
        psi = Ket(np.eye(4)[:, 0])
        f_coarse = Family.pure(dim4, (0, 1), psi, [ident4])
        f_mid = Family.pure(dim4, (0, 1), psi, [halves])
        f_fine = Family.pure(dim4, (0, 1), psi, [full])
        assert is_refinement(f_coarse, f_mid)
        assert is_refinement(f_mid, f_fine)
        assert is_refinement(f_coarse, f_fine)

    def test_requires_shared_dynamics(self, ps):
        other = PropagatorSet(
            TimeGrid((0, 1, 2, 3)),
            tuple(Operator(np.array([[0, 1], [1, 0]], dtype=complex)) for _ in range(3)),
        )
        f = Family.pure(ps, (0, 1), Z_PLUS, [Z_DEC])
        g = Family.pure(other, (0, 1), Z_PLUS, [Z_DEC])
        with pytest.raises(FamilyMismatchError):
            is_refinement(f, g)


class TestCommonRefinement:
    def test_self_is_identical(self, ps):
        fam = Family.pure(ps, (0, 1, 2), Z_PLUS, [X_DEC, X_DEC], name="F1")
        verdict = common_refinement(fam, fam)
        assert verdict.classification == CLASS_IDENTICAL
        assert verdict.compatible
        assert is_compatible(fam, fam)

    def test_extension_is_refinement_classified(self, ps):
        fam = Family.pure(ps, (0, 1), Z_PLUS, [X_DEC])
        verdict = common_refinement(fam, extend(fam, [2.0]))
        assert verdict.classification == CLASS_REFINEMENT
        assert verdict.compatible

    def test_kinematic_incompatibility(self, ps):
        # delayed split vs immediate split disagree at t1: [x, z] != 0
        f1 = Family.pure(ps, (0, 1, 2), Z_PLUS, [X_DEC, X_DEC], name="F1")
        f2 = Family.pure(ps, (0, 1, 2), Z_PLUS, [Z_DEC, X_DEC], name="F2")
        verdict = common_refinement(f1, f2)
        assert verdict.classification == CLASS_KINEMATIC
        assert isinstance(verdict.witness, KinematicWitness)
        assert verdict.witness.time_label == "t1"
        # ||[x+, z+]||_F = 1/sqrt(2)
        assert verdict.witness.commutator_norm == pytest.approx(1 / np.sqrt(2))
        assert not is_compatible(f1, f2)

    def test_dynamic_incompatibility(self, ps):
        # slotwise-commuting pair whose product family is inconsistent:
        # F = z+ (.) {x+-} (.) {I},  G = z+ (.) {I} (.) {z+-}, trivial dynamics.
        # The product z+ (.) {x+-} (.) {z+-} has |<K1, K2>| = 1/4 for the
        # (x+ z+), (x- z+) pair.
        f = Family.pure(ps, (0, 1, 2), Z_PLUS, [X_DEC, IDENT], name="F")
        g = Family.pure(ps, (0, 1, 2), Z_PLUS, [IDENT, Z_DEC], name="G")
        verdict = common_refinement(f, g)
        assert verdict.classification == CLASS_DYNAMIC
        assert not verdict.compatible
        overlaps = {
            (a[1], a[2], b[1], b[2]): o for a, b, o in verdict.witness.violations
        }
        assert overlaps[("x+", "z+", "x-", "z+")] == pytest.approx(0.25)

    def test_common_refinement_found(self, ps):
        # families splitting at different times in the same basis combine
        f = Family.pure(ps, (0, 1), Z_PLUS, [X_DEC], name="F")
        g = Family.pure(ps, (0, 2), Z_PLUS, [X_DEC], name="G")
        verdict = common_refinement(f, g)
        assert verdict.classification == CLASS_COMMON
        assert verdict.compatible
        assert verdict.refinement is not None
        from conhist.histories import consistency_check

        assert consistency_check(verdict.refinement).consistent

    def test_verdict_symmetric(self, ps):
        cases = []
        f1 = Family.pure(ps, (0, 1, 2), Z_PLUS, [X_DEC, X_DEC])
        f2 = Family.pure(ps, (0, 1, 2), Z_PLUS, [Z_DEC, X_DEC])
        cases.append((f1, f2))
        f = Family.pure(ps, (0, 1, 2), Z_PLUS, [X_DEC, IDENT])
        g = Family.pure(ps, (0, 1, 2), Z_PLUS, [IDENT, Z_DEC])
        cases.append((f, g))
        cases.append((f1, extend(f1, [3.0])))
        for a, b in cases:
            assert (
                common_refinement(a, b).classification
                == common_refinement(b, a).classification
            )

    def test_consistent_refinement_of_compatible_pair(self, ps):
        f = Family.pure(ps, (0, 1), Z_PLUS, [X_DEC])
        g = Family.pure(ps, (0, 1, 2), Z_PLUS, [X_DEC, X_DEC])
        verdict = common_refinement(f, g)
        assert verdict.compatible
        assert verdict.classification == CLASS_REFINEMENT

    def test_initial_mismatch_rejected(self, ps):
        f = Family.pure(ps, (0, 1), Z_PLUS, [X_DEC])
        g = Family.pure(ps, (0, 1), X_PLUS, [X_DEC])
        with pytest.raises(FamilyMismatchError):
            common_refinement(f, g)
