"""1+1-D spacetime geometry for relativistic history families.

Spacelike hypersurfaces over a cell lattice (c = 1 cell/step), Lorentz
boosts, causal ordering of finite regions, embedding of tagged events into
nonintersecting foliations, spacelike commutation checks on Heisenberg
projectors, and verification that a relabeled (boosted) description carries
the same physics: transformed propagators, identical weight tables and
consistency verdicts.

Hypersurfaces are piecewise linear with strict sub-luminal slope and extend
flat beyond their breakpoints.  Entangled events are atomic: every region of
an entangled event must land on a single hypersurface, which is exactly what
makes some event collections impossible to embed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .dynamics import PropagatorSet, TOL_UNITARY
from .hilbert import Operator, unitarity_defect
from .histories import Family, MixedInitial, PureInitial, consistency_check, weight_table

if TYPE_CHECKING:  # only for type checkers; scenarios are duck-typed here
    from .scenarios.base import Scenario

TIMELIKE = "timelike"
SPACELIKE = "spacelike"
LIGHTLIKE = "lightlike"

# Width of the numerical band treated as lying on the light cone.
LIGHTCONE_BAND = 1e-12


class CyclicCausalityError(ValueError):
    """The causal precedence relation contains a cycle (malformed regions)."""

    def __init__(self, cycle: Sequence[str]):
        self.cycle = tuple(cycle)
        super().__init__(f"causal precedence is cyclic through {self.cycle}")


class EmbeddingImpossibleError(ValueError):
    """No nonintersecting time-ordered foliation can realize the events."""

    def __init__(self, witness: str, detail: str):
        self.witness = witness
        self.detail = detail
        super().__init__(f"cannot embed events: {detail} (witness: {witness})")


class SpacetimePoint(NamedTuple):
    """A point (x, t) on the lattice, with c = 1 cell/step."""

    x: float
    t: float


def classify_interval(p: SpacetimePoint, q: SpacetimePoint) -> str:
    """Sign of the Minkowski interval (dt^2 - dx^2) between two points."""
    dt = q.t - p.t
    dx = q.x - p.x
    s2 = dt * dt - dx * dx
    if abs(s2) < LIGHTCONE_BAND:
        return LIGHTLIKE
    return TIMELIKE if s2 > 0 else SPACELIKE


def boost(p: SpacetimePoint, v: float) -> SpacetimePoint:
    """Standard Lorentz boost with velocity v (|v| < 1, c = 1)."""
    if abs(v) >= 1.0:
        raise ValueError(f"boost velocity must satisfy |v| < 1, got {v}")
    gamma = 1.0 / np.sqrt(1.0 - v * v)
    return SpacetimePoint(gamma * (p.x - v * p.t), gamma * (p.t - v * p.x))


@dataclass(frozen=True, eq=False)
class Hypersurface:
    """Piecewise-linear surface t = tau(x) over breakpoints, flat beyond them."""

    xs: tuple[float, ...]
    ts: tuple[float, ...]

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        ts = tuple(float(v) for v in self.ts)
        if len(xs) != len(ts) or not xs:
            raise ValueError("need matching, nonempty breakpoint coordinates")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoint x coordinates must be strictly increasing")
        if not all(np.isfinite(v) for v in xs + ts):
            raise ValueError("breakpoints must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ts", ts)

    @classmethod
    def flat(cls, t: float, x_min: float, x_max: float) -> "Hypersurface":
        return cls((float(x_min), float(x_max)), (float(t), float(t)))

    @classmethod
    def line(cls, t0: float, slope: float, x_min: float, x_max: float) -> "Hypersurface":
        """Straight surface t = t0 + slope * x between the given bounds."""
        return cls(
            (float(x_min), float(x_max)),
            (t0 + slope * x_min, t0 + slope * x_max),
        )

    def tau(self, x: float) -> float:
        return float(np.interp(x, self.xs, self.ts))

    def slopes(self) -> tuple[float, ...]:
        if len(self.xs) == 1:
            return ()
        dx = np.diff(self.xs)
        dt = np.diff(self.ts)
        return tuple(float(s) for s in dt / dx)

    def max_abs_slope(self) -> float:
        slopes = self.slopes()
        return max((abs(s) for s in slopes), default=0.0)

    def is_spacelike(self) -> bool:
        return self.max_abs_slope() < 1.0


@dataclass(frozen=True, eq=False)
class Foliation:
    """An ordered collection of nonintersecting spacelike hypersurfaces."""

    surfaces: tuple[Hypersurface, ...]

    def __len__(self) -> int:
        return len(self.surfaces)

    def to_dict(self) -> dict:
        return {
            "surfaces": [
                {"xs": list(s.xs), "ts": list(s.ts)} for s in self.surfaces
            ]
        }


@dataclass(frozen=True)
class FoliationReport:
    """Validation outcome: slope (spacelike) and ordering (nonintersection)."""

    valid: bool
    slope_violations: tuple[tuple[int, int, float], ...]  # (surface, piece, slope)
    ordering_violations: tuple[tuple[int, float, float, float], ...]  # (lower idx, x, tau_j, tau_j+1)

    def __bool__(self) -> bool:
        return self.valid

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "slope_violations": [
                {"surface": i, "piece": j, "slope": s} for i, j, s in self.slope_violations
            ],
            "ordering_violations": [
                {"lower_surface": i, "x": x, "tau_lower": a, "tau_upper": b}
                for i, x, a, b in self.ordering_violations
            ],
        }


def validate_foliation(f: Foliation) -> FoliationReport:
    """Report non-spacelike pieces and ordering violations between neighbors.

    Ordering is evaluated on the union of breakpoints of each consecutive
    pair (piecewise-linear surfaces attain extrema there).
    """
    slope_violations = []
    for i, s in enumerate(f.surfaces):
        for j, slope in enumerate(s.slopes()):
            if abs(slope) >= 1.0:
                slope_violations.append((i, j, float(slope)))
    ordering_violations = []
    for i in range(len(f.surfaces) - 1):
        lo, hi = f.surfaces[i], f.surfaces[i + 1]
        for x in sorted(set(lo.xs) | set(hi.xs)):
            a, b = lo.tau(x), hi.tau(x)
            if a >= b:
                ordering_violations.append((i, float(x), float(a), float(b)))
    return FoliationReport(
        valid=not slope_violations and not ordering_violations,
        slope_violations=tuple(slope_violations),
        ordering_violations=tuple(ordering_violations),
    )


@dataclass(frozen=True, eq=False)
class Region:
    """A finite set of lattice cells on a hypersurface."""

    cells: frozenset[int]
    surface: Hypersurface

    def __post_init__(self):
        cells = frozenset(int(c) for c in self.cells)
        if not cells:
            raise ValueError("a region needs at least one cell")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def at(cls, cells: Iterable[int], surface: Hypersurface) -> "Region":
        return cls(frozenset(cells), surface)

    def corner_points(self) -> tuple[SpacetimePoint, ...]:
        """Extremal cells at the surface time; sufficient for convex regions."""
        lo, hi = min(self.cells), max(self.cells)
        pts = [SpacetimePoint(float(lo), self.surface.tau(lo))]
        if hi != lo:
            pts.append(SpacetimePoint(float(hi), self.surface.tau(hi)))
        return tuple(pts)


@dataclass(frozen=True, eq=False)
class TaggedEvent:
    """A history event placed in spacetime.

    Local events occupy a single region; entangled events span two or more
    pairwise-disjoint regions and must be embedded on a single hypersurface.
    ``projector`` optionally names an operator in a scenario's registry, and
    ``time_index`` ties the event to a grid time of that scenario's dynamics.
    """

    id: str
    regions: tuple[Region, ...]
    projector: str | None = None
    time_index: int | None = None

    def __post_init__(self):
        regions = tuple(self.regions)
        if not regions:
            raise ValueError("an event needs at least one region")
        if len(regions) > 1:
            seen: set[int] = set()
            for r in regions:
                if seen & r.cells:
                    raise ValueError(f"entangled event {self.id!r} has overlapping regions")
                seen |= r.cells
        object.__setattr__(self, "regions", regions)

    @classmethod
    def local(
        cls,
        event_id: str,
        region: Region,
        projector: str | None = None,
        time_index: int | None = None,
    ) -> "TaggedEvent":
        return cls(event_id, (region,), projector, time_index)

    @classmethod
    def entangled(
        cls,
        event_id: str,
        regions: Sequence[Region],
        projector: str | None = None,
        time_index: int | None = None,
    ) -> "TaggedEvent":
        if len(regions) < 2:
            raise ValueError("an entangled event spans at least two regions")
        return cls(event_id, tuple(regions), projector, time_index)

    @property
    def is_local(self) -> bool:
        return len(self.regions) == 1

    @property
    def is_entangled(self) -> bool:
        return len(self.regions) > 1

    def points(self) -> tuple[SpacetimePoint, ...]:
        out: list[SpacetimePoint] = []
        for r in self.regions:
            out.extend(r.corner_points())
        return tuple(out)


def _point_precedes(p: SpacetimePoint, q: SpacetimePoint) -> bool:
    """p causally precedes q: timelike or lightlike with p strictly earlier."""
    kind = classify_interval(p, q)
    return kind in (TIMELIKE, LIGHTLIKE) and p.t < q.t


@dataclass(frozen=True, eq=False)
class CausalGraph:
    """Directed precedence between events."""

    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def successors(self, node: str) -> tuple[str, ...]:
        return tuple(b for a, b in sorted(self.edges) if a == node)

    def has_edge(self, a: str, b: str) -> bool:
        return (a, b) in self.edges

    def to_dict(self) -> dict:
        return {"nodes": list(self.nodes), "edges": [list(e) for e in sorted(self.edges)]}


def _find_cycle(nodes: Sequence, adjacency: Mapping) -> list | None:
    """Return one cycle as a node list, or None if the graph is acyclic."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in nodes}
    parent: dict = {}

    for start in nodes:
        if color[start] != WHITE:
            continue
        stack = [(start, iter(adjacency.get(start, ())))]
        color[start] = GRAY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    parent[nxt] = node
                    stack.append((nxt, iter(adjacency.get(nxt, ()))))
                    advanced = True
                    break
                if color[nxt] == GRAY:
                    cycle = [nxt, node]
                    cur = node
                    while cur != nxt:
                        cur = parent[cur]
                        cycle.append(cur)
                    cycle.reverse()
                    return cycle
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return None


def _longest_path_layers(nodes: Sequence, adjacency: Mapping) -> dict:
    """Layer = length of the longest incoming chain (graph must be acyclic)."""
    indeg = {n: 0 for n in nodes}
    for a in nodes:
        for b in adjacency.get(a, ()):
            indeg[b] += 1
    layer = {n: 0 for n in nodes}
    queue = [n for n in nodes if indeg[n] == 0]
    while queue:
        n = queue.pop(0)
        for b in adjacency.get(n, ()):
            layer[b] = max(layer[b], layer[n] + 1)
            indeg[b] -= 1
            if indeg[b] == 0:
                queue.append(b)
    return layer


def causal_precedence(events: Sequence[TaggedEvent]) -> CausalGraph:
    """Directed graph with an edge e -> e' when some point of e causally
    precedes some point of e'.

    Raises :class:`CyclicCausalityError` when the relation is cyclic, which
    signals input regions that no time ordering can accommodate.
    """
    ids = [e.id for e in events]
    if len(set(ids)) != len(ids):
        raise ValueError("event ids must be unique")
    pts = {e.id: e.points() for e in events}
    edges = set()
    for e in events:
        for g in events:
            if e.id == g.id:
                continue
            if any(_point_precedes(p, q) for p in pts[e.id] for q in pts[g.id]):
                edges.add((e.id, g.id))
    adjacency: dict[str, list[str]] = {i: [] for i in ids}
    for a, b in sorted(edges):
        adjacency[a].append(b)
    cycle = _find_cycle(ids, adjacency)
    if cycle is not None:
        raise CyclicCausalityError(cycle)
    return CausalGraph(tuple(ids), frozenset(edges))


@dataclass(frozen=True, eq=False)
class EmbeddingResult:
    """A nonintersecting foliation realizing a causal layering of events."""

    foliation: Foliation
    layer_of: dict
    layers: tuple[tuple[str, ...], ...]

    def to_dict(self) -> dict:
        return {
            "layers": [list(layer) for layer in self.layers],
            "foliation": self.foliation.to_dict(),
        }


# Largest vertical margin inserted between consecutive emitted surfaces; the
# actual margin shrinks adaptively so constrained points are never displaced.
_EMBED_GAP = 0.25


def embed_events(events: Sequence[TaggedEvent]) -> EmbeddingResult:
    """Embed events into nonintersecting spacelike hypersurfaces.

    Precedence is computed between individual regions; each entangled event
    then pins all of its regions to a single layer.  If that atomicity forces
    an event both before and after another (a cycle through an entangled
    event), embedding is impossible and the entangled event is named as the
    witness.  A cycle among purely local regions signals malformed input
    instead (:class:`CyclicCausalityError`).

    On success a concrete piecewise-linear foliation is emitted: constrained
    segments take the slopes their points demand (always strictly below 1
    because same-layer points are pairwise spacelike); unconstrained parts
    stay at gentle slopes.
    """
    ids = [e.id for e in events]
    if len(set(ids)) != len(ids):
        raise ValueError("event ids must be unique")
    if not events:
        raise ValueError("need at least one event")

    # Region-level precedence.
    rnodes: list[tuple[str, int]] = []
    rpoints: dict[tuple[str, int], tuple[SpacetimePoint, ...]] = {}
    for e in events:
        for i, r in enumerate(e.regions):
            rnodes.append((e.id, i))
            rpoints[(e.id, i)] = r.corner_points()
    redges = set()
    for a in rnodes:
        for b in rnodes:
            if a[0] == b[0]:
                continue
            if any(_point_precedes(p, q) for p in rpoints[a] for q in rpoints[b]):
                redges.add((a, b))
    radj: dict[tuple[str, int], list] = {n: [] for n in rnodes}
    for a, b in sorted(redges):
        radj[a].append(b)
    rcycle = _find_cycle(rnodes, radj)
    if rcycle is not None:
        raise CyclicCausalityError([f"{eid}[{i}]" for eid, i in rcycle])

    # Quotient by event atomicity: all regions of an event share a node.
    qadj: dict[str, set[str]] = {i: set() for i in ids}
    for (ea, _), (eb, _) in redges:
        if ea != eb:
            qadj[ea].add(eb)
    qcycle = _find_cycle(ids, {k: sorted(v) for k, v in qadj.items()})
    if qcycle is not None:
        entangled = [e for e in events if e.is_entangled and e.id in qcycle]
        if entangled:
            raise EmbeddingImpossibleError(
                entangled[0].id,
                "an entangled event's regions are forced both before and after "
                f"another event (cycle {qcycle})",
            )
        raise CyclicCausalityError(qcycle)

    layer = _longest_path_layers(ids, {k: sorted(v) for k, v in qadj.items()})
    n_layers = max(layer.values()) + 1
    grouped: list[list[str]] = [[] for _ in range(n_layers)]
    for eid in ids:
        grouped[layer[eid]].append(eid)

    # Collect constrained points per layer.
    by_event = {e.id: e for e in events}
    layer_points: list[list[SpacetimePoint]] = []
    for group in grouped:
        pts: list[SpacetimePoint] = []
        for eid in group:
            pts.extend(by_event[eid].points())
        pts.sort(key=lambda p: (p.x, p.t))
        merged: list[SpacetimePoint] = []
        for p in pts:
            if merged and abs(merged[-1].x - p.x) < 1e-12:
                if abs(merged[-1].t - p.t) > 1e-9:
                    raise EmbeddingImpossibleError(
                        group[0],
                        f"two points of one layer share x={p.x} at different times",
                    )
                continue
            merged.append(p)
        layer_points.append(merged)

    all_x = sorted({p.x for pts in layer_points for p in pts})
    x_lo, x_hi = all_x[0] - 1.0, all_x[-1] + 1.0
    breakpoints = [x_lo, *all_x, x_hi]

    surfaces: list[Hypersurface] = []
    prev: np.ndarray | None = None
    xs = np.array(breakpoints)
    for k, pts in enumerate(layer_points):
        px = [p.x for p in pts]
        pt = [p.t for p in pts]
        base = np.interp(xs, px, pt)
        if prev is not None:
            # For all-local inputs every event has a causal ancestor in each
            # lower layer, and surfaces climb strictly slower than light, so
            # each lower surface stays strictly below this layer's points;
            # the adaptive margin then never displaces a constrained point.
            headroom = min(
                p.t - float(np.interp(p.x, xs, prev)) for p in pts
            )
            if headroom <= 0.0:
                raise EmbeddingImpossibleError(
                    grouped[k][0],
                    f"layer {k} cannot pass through its events without "
                    "crossing an earlier surface",
                )
            base = np.maximum(base, prev + min(_EMBED_GAP, headroom / 2.0))
        surf = Hypersurface(tuple(float(x) for x in xs), tuple(float(t) for t in base))
        if not surf.is_spacelike():
            raise EmbeddingImpossibleError(
                grouped[k][0], f"layer {k} would need a non-spacelike surface"
            )
        surfaces.append(surf)
        prev = base

    result = EmbeddingResult(
        foliation=Foliation(tuple(surfaces)),
        layer_of={eid: layer[eid] for eid in ids},
        layers=tuple(tuple(g) for g in grouped),
    )
    return result


# -- spacelike commutation and covariance -------------------------------------


@dataclass(frozen=True)
class CommutationResult:
    """Heisenberg commutator norm for a pair of tagged events."""

    applicable: bool
    spacelike: bool
    norm: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "spacelike": self.spacelike,
            "commutator_norm": self.norm,
            "detail": self.detail,
        }


def commutation_check(
    scn: "Scenario", e: TaggedEvent, g: TaggedEvent, reference: int = 0
) -> CommutationResult:
    """``||[P, Q]||_F`` for the events' Heisenberg projectors.

    The causality requirement constrains spacelike-separated events only;
    for pairs that are not spacelike the result is flagged inapplicable
    (the norm is still reported for diagnostics).
    """
    for ev in (e, g):
        if ev.projector is None or ev.projector not in scn.projectors:
            raise KeyError(f"event {ev.id!r} does not resolve to a scenario projector")
        if ev.time_index is None:
            raise ValueError(f"event {ev.id!r} carries no grid time")
    pairs = [(p, q) for p in e.points() for q in g.points()]
    spacelike = all(classify_interval(p, q) == SPACELIKE for p, q in pairs)
    ps = scn.propagators
    p_mat = ps.heisenberg_matrix(scn.projectors[e.projector].mat, e.time_index, reference)
    q_mat = ps.heisenberg_matrix(scn.projectors[g.projector].mat, g.time_index, reference)
    norm = float(np.linalg.norm(p_mat @ q_mat - q_mat @ p_mat))
    return CommutationResult(
        applicable=spacelike,
        spacelike=spacelike,
        norm=norm,
        detail="" if spacelike else "events are not spacelike separated",
    )


@dataclass(frozen=True, eq=False)
class CovarianceMap:
    """Per-time unitaries L_j relating one frame's spaces to another's."""

    unitaries: tuple[Operator, ...]

    def __post_init__(self):
        us = tuple(self.unitaries)
        if not us:
            raise ValueError("need at least one unitary")
        for j, u in enumerate(us):
            defect = unitarity_defect(u)
            if defect >= TOL_UNITARY:
                raise ValueError(f"map {j} is not unitary: defect {defect:.3e}")
        object.__setattr__(self, "unitaries", us)

    def __len__(self) -> int:
        return len(self.unitaries)


def transform_family(fam: Family, maps: CovarianceMap, primed: PropagatorSet) -> Family:
    """Conjugate every projector (and the initial condition) by the per-time
    maps, rebasing the family onto the primed dynamics."""
    from .hilbert import DecompositionOfIdentity, Ket, Projector, DensityOperator

    decs = []
    for slot, dec in enumerate(fam.decompositions):
        j = fam.time_indices[slot]
        l_mat = maps.unitaries[j].mat
        members = []
        for label, proj in dec.members:
            members.append((label, Projector(Operator(l_mat @ proj.mat @ l_mat.conj().T))))
        decs.append(DecompositionOfIdentity(tuple(members)))
    initial = fam.initial
    if isinstance(initial, PureInitial):
        j0 = fam.time_indices[fam.initial_slot]
        ket = Ket(maps.unitaries[j0].mat @ initial.ket.amps, initial.ket.label)
        initial = PureInitial(ket, initial.label)
    elif isinstance(initial, MixedInitial):
        j0 = fam.time_indices[fam.initial_slot]
        l_mat = maps.unitaries[j0].mat
        initial = MixedInitial(
            DensityOperator(Operator(l_mat @ initial.rho.mat @ l_mat.conj().T))
        )
    return Family(primed, fam.time_indices, tuple(decs), initial, fam.initial_slot, fam.name)


@dataclass(frozen=True)
class CovarianceReport:
    """Frame-equivalence check: transformed dynamics and families agree."""

    passed: bool
    propagator_residual: float
    family_results: tuple[tuple[str, float, bool], ...]  # (name, max |dW|, verdicts agree)
    skipped: tuple[str, ...] = ()  # families carried on auxiliary dynamics

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "propagator_residual": self.propagator_residual,
            "families": [
                {"name": n, "max_weight_diff": d, "verdicts_agree": v}
                for n, d, v in self.family_results
            ],
            "skipped": list(self.skipped),
        }


def covariance_check(
    scn: "Scenario",
    maps: CovarianceMap,
    primed: "Scenario",
    tol_propagator: float = 1e-10,
    tol_weight: float = 1e-9,
) -> CovarianceReport:
    """Verify that the primed description is the same physics relabeled.

    Checks ``T'_{jk} = L_j T_{jk} L_k^dag`` over all index pairs, then that
    every named family's weight table and consistency verdict survive
    conjugating all projectors (and the initial condition) by the maps.
    """
    ps, pps = scn.propagators, primed.propagators
    n = len(ps.grid)
    if len(maps) != n:
        raise ValueError(f"need one map per grid time ({n}), got {len(maps)}")
    if len(pps.grid) != n or ps.dim != pps.dim:
        raise ValueError("primed dynamics must match grid length and dimension")
    residual = 0.0
    for j in range(n):
        lj = maps.unitaries[j].mat
        for k in range(n):
            lk = maps.unitaries[k].mat
            t_prime = pps.propagator(j, k).mat
            expected = lj @ ps.propagator(j, k).mat @ lk.conj().T
            residual = max(residual, float(np.linalg.norm(t_prime - expected)))

    family_results = []
    skipped = []
    all_ok = residual < tol_propagator
    for name in sorted(scn.families):
        fam = scn.families[name]
        if not fam.propagators.same_dynamics(ps):
            # Families on auxiliary dynamics (other frame orderings) carry
            # their own per-time spaces; the maps here do not apply to them.
            skipped.append(name)
            continue
        fam_p = transform_family(fam, maps, pps)
        w0 = weight_table(fam)
        w1 = weight_table(fam_p)
        diffs = [abs(a - b) for (_, a), (_, b) in zip(w0.entries, w1.entries)]
        max_diff = max(diffs, default=0.0)
        verdict0 = consistency_check(fam).consistent
        verdict1 = consistency_check(fam_p).consistent
        agree = verdict0 == verdict1
        family_results.append((name, float(max_diff), agree))
        if max_diff >= tol_weight or not agree:
            all_ok = False

    return CovarianceReport(
        passed=all_ok,
        propagator_residual=residual,
        family_results=tuple(family_results),
        skipped=tuple(skipped),
    )
