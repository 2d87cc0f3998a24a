"""Dense complex operator algebra for finite-dimensional Hilbert spaces.

Kets, operators, projectors, decompositions of the identity, density
operators, tensor products, and the two operator inner products used by the
histories machinery: the trace inner product ``<A, B> = Tr(A^dag B)`` and its
density-weighted variant ``<A, B>_rho = Tr(rho A^dag B)``.

All values are immutable after construction (backing arrays are marked
read-only) and all operations are pure functions, so everything here is safe
to use concurrently.  Spaces are finite-dimensional by design; there is no
symbolic or arbitrary-precision arithmetic.  (On infinite-dimensional spaces
the trace inner product need not exist; restricting to finite-dimensional
models sidesteps that question entirely.)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Frobenius-norm tolerance for projector/decomposition invariants.  Two orders
# above accumulated rounding at the dimensions we use (<~200), far below any
# physical gap in the models.
TOL_PROJ = 1e-9
# Tolerance on norms/traces of states.
TOL_NORM = 1e-9
# Singular-value threshold for rank decisions when spanning kets.
TOL_SPAN = 1e-10


class DimensionMismatchError(ValueError):
    """Operands live on spaces of different dimension."""


def _as_complex_matrix(entries, dim: int | None = None) -> np.ndarray:
    mat = np.array(entries, dtype=np.complex128, copy=True)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    if dim is not None and mat.shape[0] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {mat.shape[0]}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix entries must be finite")
    mat.flags.writeable = False
    return mat


def _frob(mat: np.ndarray) -> float:
    return float(np.linalg.norm(mat))


@dataclass(frozen=True, eq=False)
class Ket:
    """A vector in a finite-dimensional complex Hilbert space.

    The norm may be any nonnegative finite value; states used as initial
    conditions additionally must be normalized within ``TOL_NORM``.
    """

    amps: np.ndarray
    label: str | None = None

    def __post_init__(self):
        vec = np.array(self.amps, dtype=np.complex128, copy=True)
        if vec.ndim != 1 or vec.size == 0:
            raise ValueError("a ket is a nonempty 1-D amplitude vector")
        if not np.all(np.isfinite(vec)):
            raise ValueError("ket amplitudes must be finite")
        vec.flags.writeable = False
        object.__setattr__(self, "amps", vec)

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self, label: str | None = None) -> "Ket":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero ket")
        return Ket(self.amps / n, label if label is not None else self.label)

    def dagger_apply(self, other: "Ket") -> complex:
        """Inner product ``<self|other>``."""
        if self.dim != other.dim:
            raise DimensionMismatchError("kets of different dimension")
        return complex(np.vdot(self.amps, other.amps))

    def projector(self) -> "Projector":
        """Orthogonal projector onto this (normalized) ket."""
        return projector_onto_span([self])


@dataclass(frozen=True, eq=False)
class Operator:
    """A dense complex square matrix with dimension metadata.

    One representation serves every operator role: projectors, unitaries,
    Hamiltonians, chain operators, density operators.
    """

    mat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mat", _as_complex_matrix(self.mat))

    @classmethod
    def identity(cls, dim: int) -> "Operator":
        return cls(np.eye(dim, dtype=np.complex128))

    @classmethod
    def zero(cls, dim: int) -> "Operator":
        return cls(np.zeros((dim, dim), dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.mat.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def norm(self) -> float:
        """Frobenius norm."""
        return _frob(self.mat)

    def apply(self, ket: Ket) -> Ket:
        if ket.dim != self.dim:
            raise DimensionMismatchError("operator/ket dimension mismatch")
        return Ket(self.mat @ ket.amps)

    def __matmul__(self, other: "Operator") -> "Operator":
        if self.dim != other.dim:
            raise DimensionMismatchError("operator dimensions differ")
        return Operator(self.mat @ other.mat)

    def __add__(self, other: "Operator") -> "Operator":
        if self.dim != other.dim:
            raise DimensionMismatchError("operator dimensions differ")
        return Operator(self.mat + other.mat)

    def __sub__(self, other: "Operator") -> "Operator":
        if self.dim != other.dim:
            raise DimensionMismatchError("operator dimensions differ")
        return Operator(self.mat - other.mat)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.mat * scalar)

    __rmul__ = __mul__

    def allclose(self, other: "Operator", tol: float = TOL_PROJ) -> bool:
        return self.dim == other.dim and _frob(self.mat - other.mat) < tol

    def is_hermitian(self, tol: float = TOL_PROJ) -> bool:
        return _frob(self.mat - self.mat.conj().T) < tol

    def is_unitary(self, tol: float = TOL_PROJ) -> bool:
        return unitarity_defect(self) < tol

    def commutator_norm(self, other: "Operator") -> float:
        """Frobenius norm of ``[self, other]``."""
        if self.dim != other.dim:
            raise DimensionMismatchError("operator dimensions differ")
        return _frob(self.mat @ other.mat - other.mat @ self.mat)


def unitarity_defect(u: Operator) -> float:
    """``||U^dag U - I||_F``; zero for exact unitaries."""
    return _frob(u.mat.conj().T @ u.mat - np.eye(u.dim))


@dataclass(frozen=True)
class ProjectorCheck:
    """Diagnostics from :func:`is_projector`."""

    ok: bool
    hermiticity_defect: float
    idempotency_defect: float

    def __bool__(self) -> bool:
        return self.ok


def is_projector(p: Operator, tol: float = TOL_PROJ) -> ProjectorCheck:
    """Test whether ``p`` is an orthogonal projector within ``tol`` (Frobenius)."""
    herm = _frob(p.mat - p.mat.conj().T)
    idem = _frob(p.mat - p.mat @ p.mat)
    return ProjectorCheck(herm < tol and idem < tol, herm, idem)


@dataclass(frozen=True, eq=False)
class Projector:
    """An orthogonal projector; Hermitian and idempotent within ``TOL_PROJ``.

    ``rank`` is cached from the trace, which for a projector is its rank.
    """

    op: Operator
    rank: int = field(init=False)

    def __post_init__(self):
        check = is_projector(self.op, TOL_PROJ)
        if not check:
            raise ValueError(
                "not a projector: hermiticity defect "
                f"{check.hermiticity_defect:.3e}, idempotency defect "
                f"{check.idempotency_defect:.3e} (tol {TOL_PROJ:.0e})"
            )
        tr = self.op.trace()
        r = round(tr.real)
        if abs(tr - r) >= TOL_PROJ:
            raise ValueError(f"projector trace {tr} is not close to an integer")
        object.__setattr__(self, "rank", int(r))

    @classmethod
    def from_matrix(cls, entries) -> "Projector":
        return cls(Operator(entries))

    @classmethod
    def identity(cls, dim: int) -> "Projector":
        return cls(Operator.identity(dim))

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    def complement(self) -> "Projector":
        return Projector(Operator.identity(self.dim) - self.op)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Unit-trace, Hermitian, positive-semidefinite operator."""

    op: Operator

    def __post_init__(self):
        if not self.op.is_hermitian(TOL_PROJ):
            raise ValueError("density operator must be Hermitian")
        evals = np.linalg.eigvalsh(self.op.mat)
        if evals.min() < -TOL_PROJ:
            raise ValueError(f"density operator has negative eigenvalue {evals.min():.3e}")
        tr = self.op.trace()
        if abs(tr - 1.0) >= TOL_NORM:
            raise ValueError(f"density operator trace {tr} != 1")

    @classmethod
    def from_ket(cls, ket: Ket) -> "DensityOperator":
        psi = ket.normalized()
        return cls(Operator(np.outer(psi.amps, psi.amps.conj())))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(Operator(np.eye(dim, dtype=np.complex128) / dim))

    @classmethod
    def from_projector(cls, p: Projector) -> "DensityOperator":
        """Maximally mixed state over the range of ``p``."""
        if p.rank == 0:
            raise ValueError("cannot build a state from the zero projector")
        return cls(Operator(p.mat / p.rank))

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat


def tensor_product(a: Operator, b: Operator) -> Operator:
    """Kronecker product; entry ((i*db+k),(j*db+l)) equals a[i,j]*b[k,l]."""
    return Operator(np.kron(a.mat, b.mat))


def tensor_product_many(ops: Sequence[Operator]) -> Operator:
    if not ops:
        raise ValueError("need at least one factor")
    out = ops[0]
    for op in ops[1:]:
        out = tensor_product(out, op)
    return out


def tensor_ket(a: Ket, b: Ket) -> Ket:
    return Ket(np.kron(a.amps, b.amps))


def op_inner(a: Operator, b: Operator) -> complex:
    """Trace inner product ``Tr(a^dag b)``."""
    if a.dim != b.dim:
        raise DimensionMismatchError("op_inner requires equal dimensions")
    return complex(np.vdot(a.mat, b.mat))


def rho_inner(rho: DensityOperator, a: Operator, b: Operator) -> complex:
    """Density-weighted inner product ``Tr(rho a^dag b)``."""
    if not (rho.dim == a.dim == b.dim):
        raise DimensionMismatchError("rho_inner requires equal dimensions")
    return complex(np.trace(rho.mat @ (a.mat.conj().T @ b.mat)))


@dataclass(frozen=True)
class DecompositionReport:
    """Validation report for a (candidate) decomposition of the identity."""

    valid: bool
    completeness_defect: float
    max_pairwise_overlap: float

    def __bool__(self) -> bool:
        return self.valid


@dataclass(frozen=True, eq=False)
class DecompositionOfIdentity:
    """An ordered, labeled set of mutually orthogonal projectors summing to I.

    Labels are attached to members (rather than bare indices) so families can
    be reported in physics notation (``z+``, ``x-``, ``A*``, ``ebar``, ...).
    """

    members: tuple[tuple[str, Projector], ...]

    def __post_init__(self):
        members = tuple((str(label), proj) for label, proj in self.members)
        if not members:
            raise ValueError("a decomposition needs at least one member")
        labels = [label for label, _ in members]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate member labels in {labels}")
        for label in labels:
            if "," in label or "=" in label or "|" in label or not label:
                raise ValueError(f"member label {label!r} may not be empty or contain , = |")
        dims = {proj.dim for _, proj in members}
        if len(dims) != 1:
            raise ValueError("decomposition members must share one dimension")
        object.__setattr__(self, "members", members)
        report = validate_decomposition(self)
        if not report:
            raise ValueError(
                "not a decomposition of the identity: completeness defect "
                f"{report.completeness_defect:.3e}, max pairwise overlap "
                f"{report.max_pairwise_overlap:.3e} (tol {TOL_PROJ:.0e})"
            )

    @classmethod
    def trivial(cls, dim: int, label: str = "I") -> "DecompositionOfIdentity":
        return cls(((label, Projector.identity(dim)),))

    @classmethod
    def from_projector(cls, p: Projector, label: str, complement_label: str | None = None) -> "DecompositionOfIdentity":
        """Two-member decomposition {P, I-P} (single member if P = I)."""
        if p.rank == p.dim:
            return cls(((label, p),))
        if complement_label is None:
            complement_label = "~" + label
        return cls(((label, p), (complement_label, p.complement())))

    @classmethod
    def from_basis(cls, kets: Sequence[Ket], labels: Sequence[str]) -> "DecompositionOfIdentity":
        """Rank-1 members from an orthonormal basis."""
        if len(kets) != len(labels):
            raise ValueError("one label per basis ket")
        return cls(tuple((lab, ket.projector()) for lab, ket in zip(labels, kets)))

    @property
    def dim(self) -> int:
        return self.members[0][1].dim

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.members)

    def __len__(self) -> int:
        return len(self.members)

    def projector(self, label: str) -> Projector:
        for lab, proj in self.members:
            if lab == label:
                return proj
        raise KeyError(f"no member labeled {label!r}")

    def refine_member(self, label: str, parts: Sequence[tuple[str, Projector]]) -> "DecompositionOfIdentity":
        """Split one member into orthogonal parts that sum to it."""
        target = self.projector(label)
        total = Operator.zero(self.dim)
        for _, part in parts:
            total = total + part.op
        if not total.allclose(target.op):
            raise ValueError(f"parts do not sum to member {label!r}")
        new_members = []
        for lab, proj in self.members:
            if lab == label:
                new_members.extend(parts)
            else:
                new_members.append((lab, proj))
        return DecompositionOfIdentity(tuple(new_members))


def validate_decomposition(d: DecompositionOfIdentity) -> DecompositionReport:
    """Report completeness defect ``||sum P - I||`` and max pairwise ``||P_a P_b||``."""
    dim = d.dim
    total = np.zeros((dim, dim), dtype=np.complex128)
    for _, proj in d.members:
        total += proj.mat
    completeness = _frob(total - np.eye(dim))
    max_overlap = 0.0
    mats = [proj.mat for _, proj in d.members]
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            max_overlap = max(max_overlap, _frob(mats[i] @ mats[j]))
    return DecompositionReport(
        valid=(completeness < TOL_PROJ and max_overlap < TOL_PROJ),
        completeness_defect=completeness,
        max_pairwise_overlap=max_overlap,
    )


def projector_onto_span(kets: Sequence[Ket]) -> Projector:
    """Orthogonal projector onto the linear span of ``kets``.

    Rank equals the number of linearly independent inputs (singular values
    above ``TOL_SPAN`` relative to the largest).
    """
    if not kets:
        raise ValueError("need at least one ket")
    dims = {k.dim for k in kets}
    if len(dims) != 1:
        raise DimensionMismatchError("kets must share one dimension")
    cols = np.column_stack([k.amps for k in kets])
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        raise ValueError("cannot project onto the span of zero kets")
    keep = s > TOL_SPAN * s[0]
    basis = u[:, keep]
    mat = basis @ basis.conj().T
    # Symmetrize away the last rounding crumbs so downstream checks are clean.
    mat = (mat + mat.conj().T) / 2.0
    return Projector(Operator(mat))
