"""Time grids, unitary propagator sets, and Heisenberg-picture conversion.

A :class:`PropagatorSet` stores one unitary per consecutive pair of grid
times; arbitrary two-time propagators are composed on demand and obey the
groupoid laws ``T(j,j) = I``, ``T(i,j) T(j,k) = T(i,k)`` and
``T(j,k)^dag = T(k,j)``.  Composition is cached internally but the cache is
semantically invisible.  hbar = 1 throughout; the models are unit-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import Operator, Projector, TOL_PROJ, unitarity_defect

# Unitarity tolerance for step operators.
TOL_UNITARY = 1e-9


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing times with printable labels (t0, t1, ...)."""

    values: tuple[float, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("a time grid needs at least one time")
        if any(not np.isfinite(v) for v in values):
            raise ValueError("grid times must be finite")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"grid times must be strictly increasing: {values}")
        labels = tuple(self.labels) or tuple(f"t{v:g}" for v in values)
        if len(labels) != len(values):
            raise ValueError("one label per grid time")
        if len(set(labels)) != len(labels):
            raise ValueError("grid labels must be unique")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.values)

    def index_of_value(self, t: float, tol: float = 1e-9) -> int:
        for i, v in enumerate(self.values):
            if abs(v - t) <= tol:
                return i
        raise KeyError(f"time {t} not on grid {self.values}")

    def index_of_label(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no grid time labeled {label!r}") from None


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Hermitian generator of time development."""

    op: Operator

    def __post_init__(self):
        if not self.op.is_hermitian(TOL_PROJ):
            raise ValueError("Hamiltonian must be Hermitian")

    @property
    def dim(self) -> int:
        return self.op.dim


def propagator_from_hamiltonian(h: Hamiltonian, t_to: float, t_from: float) -> Operator:
    """``exp[-i (t_to - t_from) H]`` with hbar = 1, via eigendecomposition."""
    evals, evecs = np.linalg.eigh(h.op.mat)
    phases = np.exp(-1j * (t_to - t_from) * evals)
    return Operator((evecs * phases) @ evecs.conj().T)


@dataclass(frozen=True, eq=False)
class PropagatorSet:
    """Per-step unitaries over a time grid.

    ``steps[j]`` maps the space at time j to the space at time j+1.  All
    per-time spaces share one dimension; models that conceptually change
    dimension embed into a common larger space.
    """

    grid: TimeGrid
    steps: tuple[Operator, ...]
    space_dim: int | None = None
    _cumulative: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        steps = tuple(self.steps)
        if len(steps) != len(self.grid) - 1:
            raise ValueError(
                f"need {len(self.grid) - 1} step unitaries for {len(self.grid)} times, got {len(steps)}"
            )
        dims = {u.dim for u in steps}
        if self.space_dim is not None:
            dims.add(int(self.space_dim))
        if len(dims) > 1:
            raise ValueError("step unitaries must share one dimension")
        if not dims:
            raise ValueError("a single-time propagator set needs an explicit space_dim")
        for j, u in enumerate(steps):
            defect = unitarity_defect(u)
            if defect >= TOL_UNITARY:
                raise ValueError(f"step {j} is not unitary: defect {defect:.3e}")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "space_dim", dims.pop())

    @classmethod
    def trivial(cls, grid: TimeGrid, dim: int) -> "PropagatorSet":
        return cls(grid, tuple(Operator.identity(dim) for _ in range(len(grid) - 1)), space_dim=dim)

    @property
    def dim(self) -> int:
        return self.space_dim

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.dim for _ in self.grid.values)

    def _cum(self, j: int) -> np.ndarray:
        """Matrix of T(j <- 0), built lazily."""
        if not self._cumulative:
            acc = np.eye(self.dim, dtype=np.complex128)
            self._cumulative.append(acc)
            for u in self.steps:
                acc = u.mat @ acc
                self._cumulative.append(acc)
        return self._cumulative[j]

    def propagator(self, j: int, k: int) -> Operator:
        """``T(j, k)`` mapping the space at time k to the space at time j."""
        n = len(self.grid)
        if not (0 <= j < n and 0 <= k < n):
            raise IndexError(f"time indices ({j}, {k}) out of range for {n} times")
        if j == k:
            return Operator.identity(self.dim)
        if k == 0:
            return Operator(self._cum(j))
        return Operator(self._cum(j) @ self._cum(k).conj().T)

    def heisenberg_matrix(self, mat: np.ndarray, j: int, reference: int = 0) -> np.ndarray:
        t_rj = self.propagator(reference, j).mat
        return t_rj @ mat @ t_rj.conj().T

    def same_dynamics(self, other: "PropagatorSet", tol: float = 1e-9) -> bool:
        """Equal grids and equal step unitaries within ``tol``."""
        if self.grid.values != other.grid.values:
            return False
        if self is other:
            return True
        return all(a.allclose(b, tol) for a, b in zip(self.steps, other.steps))


def propagator(ps: PropagatorSet, j: int, k: int) -> Operator:
    """Module-level alias for :meth:`PropagatorSet.propagator`."""
    return ps.propagator(j, k)


def heisenberg(p: Projector, ps: PropagatorSet, j: int, reference: int = 0) -> Operator:
    """Heisenberg form ``T(r, j) P T(j, r)`` of a projector at time j.

    The output is again a projector (similarity transform by a unitary); it is
    returned as a plain Operator because callers immediately multiply chains.
    """
    if p.dim != ps.dim:
        raise ValueError("projector/propagator dimension mismatch")
    return Operator(ps.heisenberg_matrix(p.mat, j, reference))
