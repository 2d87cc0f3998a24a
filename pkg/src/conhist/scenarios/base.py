"""Scenario plumbing: packaged models with named states, projectors,
families, spacetime events, and a registry of expected results.

Each built-in scenario exposes everything the engine needs to reproduce its
model's analytic numbers as executable checks: the dynamics, the named
kets/projectors, the families, tagged spacetime events for the geometric
checks, and an ``expected`` list whose entries re-derive each number through
the public API and compare against the registered value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..dynamics import PropagatorSet
from ..hilbert import Ket, Operator, Projector
from ..histories import Family
from ..relativistic import CovarianceMap, TaggedEvent, transform_family

PROVENANCE_PAPER = "paper"
PROVENANCE_DERIVED = "derived"
PROVENANCE_TRIVIAL = "trivial"


@dataclass(frozen=True)
class ExpectationResult:
    description: str
    provenance: str
    expected: float
    measured: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "provenance": self.provenance,
            "expected": self.expected,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclass(frozen=True, eq=False)
class Expectation:
    """One registered result: a query against the scenario plus its value.

    ``kind`` is "equals" (|measured - expected| <= tolerance) or "greater"
    (measured > expected, used for noncommutation/violation thresholds).
    """

    description: str
    provenance: str
    query: Callable[["Scenario"], float]
    expected: float
    tolerance: float = 1e-9
    kind: str = "equals"

    def run(self, scn: "Scenario") -> ExpectationResult:
        measured = float(self.query(scn))
        if self.kind == "equals":
            passed = abs(measured - self.expected) <= self.tolerance
        elif self.kind == "greater":
            passed = measured > self.expected
        else:
            raise ValueError(f"unknown expectation kind {self.kind!r}")
        return ExpectationResult(
            self.description, self.provenance, self.expected, measured,
            self.tolerance, passed,
        )


@dataclass(frozen=True, eq=False)
class Scenario:
    """A packaged model: dynamics, named objects, families, events, and the
    registry of expected results."""

    name: str
    propagators: PropagatorSet
    kets: Mapping[str, Ket]
    projectors: Mapping[str, Projector]
    families: Mapping[str, Family]
    events: Mapping[str, TaggedEvent]
    expected: tuple[Expectation, ...]
    # Grid time index associated with each named ket/projector, where one is
    # meaningful; used when relabeling the scenario frame by frame.
    named_times: Mapping[str, int] = field(default_factory=dict)
    description: str = ""

    @property
    def dim(self) -> int:
        return self.propagators.dim

    def family(self, name: str) -> Family:
        try:
            return self.families[name]
        except KeyError:
            raise KeyError(
                f"scenario {self.name!r} has no family {name!r}; "
                f"available: {sorted(self.families)}"
            ) from None

    def run_expected(self) -> list[ExpectationResult]:
        return [e.run(self) for e in self.expected]


def run_expectations(scn: Scenario) -> list[ExpectationResult]:
    return scn.run_expected()


def basis_relabeling_maps(ps: PropagatorSet, seed: int = 7) -> CovarianceMap:
    """Deterministic per-time relabeling unitaries: permutation times phases.

    Different maps at different times exercise the full transformation law
    for the dynamics, not just a global change of basis.
    """
    rng = np.random.default_rng(seed)
    dim = ps.dim
    maps = []
    for _ in range(len(ps.grid)):
        perm = rng.permutation(dim)
        phases = np.exp(2j * np.pi * rng.random(dim))
        mat = np.zeros((dim, dim), dtype=np.complex128)
        mat[perm, np.arange(dim)] = phases
        maps.append(Operator(mat))
    return CovarianceMap(tuple(maps))


def transformed_propagators(ps: PropagatorSet, maps: CovarianceMap) -> PropagatorSet:
    """The same dynamics written in the relabeled per-time bases."""
    if len(maps) != len(ps.grid):
        raise ValueError("need one map per grid time")
    steps = []
    for j, step in enumerate(ps.steps):
        lj1 = maps.unitaries[j + 1].mat
        lj = maps.unitaries[j].mat
        steps.append(Operator(lj1 @ step.mat @ lj.conj().T))
    return PropagatorSet(ps.grid, tuple(steps), space_dim=ps.dim)


def transform_scenario(scn: Scenario, maps: CovarianceMap, seed: int = 7) -> Scenario:
    """A relabeled twin of the scenario: every per-time basis conjugated.

    Families living on the scenario's master dynamics are transformed with
    ``maps``; families carried on auxiliary propagator sets (other frame
    orderings) get their own deterministic maps derived from ``seed``.
    Events keep their geometry: relabeling does not move spacetime points.
    """
    primed_ps = transformed_propagators(scn.propagators, maps)
    aux_maps: dict[int, tuple[CovarianceMap, PropagatorSet]] = {}
    families = {}
    for name, fam in scn.families.items():
        if fam.propagators.same_dynamics(scn.propagators):
            families[name] = transform_family(fam, maps, primed_ps)
        else:
            key = id(fam.propagators)
            if key not in aux_maps:
                m = basis_relabeling_maps(fam.propagators, seed=seed + 1 + len(aux_maps))
                aux_maps[key] = (m, transformed_propagators(fam.propagators, m))
            m, aux_ps = aux_maps[key]
            families[name] = transform_family(fam, m, aux_ps)
    kets = {}
    for name, ket in scn.kets.items():
        j = scn.named_times.get(name, 0)
        kets[name] = Ket(maps.unitaries[j].mat @ ket.amps, ket.label)
    projectors = {}
    for name, proj in scn.projectors.items():
        j = scn.named_times.get(name, 0)
        l_mat = maps.unitaries[j].mat
        projectors[name] = Projector(Operator(l_mat @ proj.mat @ l_mat.conj().T))
    return Scenario(
        name=scn.name + "-relabeled",
        propagators=primed_ps,
        kets=kets,
        projectors=projectors,
        families=families,
        events=dict(scn.events),
        expected=(),
        named_times=dict(scn.named_times),
        description=scn.description,
    )


def relabeling_weight_residual(fam: Family, seed: int = 11) -> float:
    """Max weight change when the family is rewritten in relabeled bases.

    Zero (to rounding) for any family: weights are frame-independent.
    """
    from ..histories import weight_table

    maps = basis_relabeling_maps(fam.propagators, seed=seed)
    primed = transformed_propagators(fam.propagators, maps)
    fam_p = transform_family(fam, maps, primed)
    w0 = weight_table(fam)
    w1 = weight_table(fam_p)
    return max(
        (abs(a - b) for (_, a), (_, b) in zip(w0.entries, w1.entries)), default=0.0
    )


def spacelike_local_event_pairs(
    scn: Scenario, count: int, seed: int = 0
) -> list[tuple[TaggedEvent, TaggedEvent]]:
    """Deterministically sample spacelike-separated local event pairs."""
    from ..relativistic import SPACELIKE, classify_interval

    locals_ = [
        e for e in scn.events.values()
        if e.is_local and e.projector is not None and e.time_index is not None
    ]
    pairs = []
    for i, e in enumerate(locals_):
        for g in locals_[i + 1:]:
            if all(
                classify_interval(p, q) == SPACELIKE
                for p in e.points()
                for q in g.points()
            ):
                pairs.append((e, g))
    if not pairs:
        return []
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(pairs), size=count)
    return [pairs[i] for i in idx]
