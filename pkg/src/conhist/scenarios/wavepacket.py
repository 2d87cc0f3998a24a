"""One-dimensional wave-packet collapse scenario with two detectors.

A single particle leaves a source cell in an equal superposition of a
left-moving and a right-moving packet; detector A sits to the left (closer),
detector B to the right.  Packets are single-cell occupations moving one
cell per step (c = 1), so trajectories are exact and the interval
coarse-graining carries the physics.

State space: particle ((cell, direction) pairs plus one absorbed marker)
tensor detector A (ready/triggered) tensor detector B.  Detection is a
basis swap |det_cell, dir>|ready> <-> |absorbed>|triggered> applied exactly
at the step where the packet reaches the detector; before and after that
step both particle and detectors evolve trivially (identity apart from the
shift).  All step operators are permutation matrices, so locality holds
exactly: every Heisenberg projector of a lattice-diagonal property stays
diagonal.

Interval projectors sum the cell projectors over each member of a disjoint
partition of the cells; the per-time decomposition adds the absorbed marker
as its own member.
"""

from __future__ import annotations

import numpy as np

from ..dynamics import PropagatorSet, TimeGrid
from ..hilbert import DecompositionOfIdentity, Ket, Operator, Projector
from ..histories import (
    Family,
    conditional_probability,
    consistency_check,
    probabilities,
    support,
)
from ..framework import CLASS_KINEMATIC, common_refinement
from ..relativistic import Hypersurface, Region, TaggedEvent, commutation_check
from .base import (
    Expectation,
    PROVENANCE_DERIVED,
    PROVENANCE_PAPER,
    PROVENANCE_TRIVIAL,
    Scenario,
)

_LEFT, _RIGHT = 0, 1


def default_intervals(n_cells: int, width: int = 3) -> tuple[tuple[int, ...], ...]:
    """Contiguous intervals of the given width partitioning the cells."""
    if n_cells % width:
        raise ValueError(f"{width} does not divide {n_cells}")
    return tuple(
        tuple(range(k, k + width)) for k in range(0, n_cells, width)
    )


def build_wavepacket(
    n_cells: int = 24,
    source: int = 12,
    det_a: int = 6,
    det_b: int = 21,
    intervals: tuple[tuple[int, ...], ...] | None = None,
) -> Scenario:
    if intervals is None:
        intervals = default_intervals(n_cells)
    cells = sorted(c for interval in intervals for c in interval)
    if cells != list(range(n_cells)):
        raise ValueError("intervals must partition the cells disjointly")
    if not (0 <= det_a < source < det_b <= n_cells - 1):
        raise ValueError("need det_a < source < det_b inside the lattice")
    t_a = source - det_a
    t_b = det_b - source
    if t_a >= t_b:
        raise ValueError("detector A must be strictly closer to the source than B")
    if t_a < 4:
        raise ValueError("detector A must be at least 4 cells from the source")
    if t_b < t_a + 2:
        raise ValueError("detector B must trail detector A by at least 2 steps")

    n_part = 2 * n_cells + 1
    absorbed = 2 * n_cells
    dim = n_part * 4

    def p_idx(cell: int, direction: int) -> int:
        return 2 * cell + direction

    # Particle shift: one cell per step in the packet's direction.
    shift = np.zeros((n_part, n_part), dtype=np.complex128)
    for c in range(n_cells):
        shift[p_idx((c - 1) % n_cells, _LEFT), p_idx(c, _LEFT)] = 1.0
        shift[p_idx((c + 1) % n_cells, _RIGHT), p_idx(c, _RIGHT)] = 1.0
    shift[absorbed, absorbed] = 1.0
    i2 = np.eye(2, dtype=np.complex128)
    shift_full = np.kron(shift, np.kron(i2, i2))

    def detector_swap(det_cell: int, direction: int, which: str) -> np.ndarray:
        """Swap |det_cell, dir>|ready> with |absorbed>|triggered>.

        The swap acts for either state of the other detector.
        """
        u = np.eye(dim, dtype=np.complex128)
        for other in range(2):
            if which == "A":
                src = (p_idx(det_cell, direction) * 2 + 0) * 2 + other
                dst = (absorbed * 2 + 1) * 2 + other
            else:
                src = (p_idx(det_cell, direction) * 2 + other) * 2 + 0
                dst = (absorbed * 2 + other) * 2 + 1
            u[src, src] = u[dst, dst] = 0.0
            u[dst, src] = u[src, dst] = 1.0
        return u

    swap_a = detector_swap(det_a, _LEFT, "A")
    swap_b = detector_swap(det_b, _RIGHT, "B")

    t_max = t_b + 1
    lattice_steps = []
    for t in range(t_max):
        u = shift_full
        if t == t_a - 1:
            u = swap_a @ u
        if t == t_b - 1:
            u = swap_b @ u
        lattice_steps.append(u)

    mid = (1 + (t_a - 1)) // 2
    f_times = (0, 1, mid, t_a - 1)
    g_times = (0, mid, t_a + 1, t_b + 1)
    master_values = sorted(set(f_times) | set(g_times))
    grid = TimeGrid(tuple(float(v) for v in master_values))

    steps = []
    for v0, v1 in zip(master_values, master_values[1:]):
        u = np.eye(dim, dtype=np.complex128)
        for t in range(v0, v1):
            u = lattice_steps[t] @ u
        steps.append(Operator(u))
    ps = PropagatorSet(grid, tuple(steps))

    midx = {v: i for i, v in enumerate(master_values)}
    tlab = {v: grid.labels[midx[v]] for v in master_values}

    # -- named kets and projectors -------------------------------------------

    ready = np.zeros(4, dtype=np.complex128)
    ready[0] = 1.0  # both detectors ready
    packet_l = np.zeros(n_part, dtype=np.complex128)
    packet_l[p_idx(source, _LEFT)] = 1.0
    packet_r = np.zeros(n_part, dtype=np.complex128)
    packet_r[p_idx(source, _RIGHT)] = 1.0
    psi0_vec = np.kron((packet_l + packet_r) / np.sqrt(2), ready)
    psi0 = Ket(psi0_vec, "Psi0")

    evolved = {0: psi0_vec}
    vec = psi0_vec
    for t in range(t_max):
        vec = lattice_steps[t] @ vec
        evolved[t + 1] = vec

    interval_of = {}
    for k, interval in enumerate(intervals):
        for c in interval:
            interval_of[c] = k

    P: dict[str, Projector] = {}
    i4 = np.eye(4, dtype=np.complex128)
    for k, interval in enumerate(intervals):
        diag = np.zeros(n_part)
        for c in interval:
            diag[p_idx(c, _LEFT)] = 1.0
            diag[p_idx(c, _RIGHT)] = 1.0
        P[f"int{k}"] = Projector(Operator(np.kron(np.diag(diag), i4)))
    abs_diag = np.zeros(n_part)
    abs_diag[absorbed] = 1.0
    P["abs"] = Projector(Operator(np.kron(np.diag(abs_diag), i4)))

    ip = np.eye(n_part, dtype=np.complex128)
    for lab, a_state, b_state in (
        ("AB", 0, 0), ("A*B", 1, 0), ("AB*", 0, 1), ("A*B*", 1, 1),
    ):
        da = np.zeros(2)
        da[a_state] = 1.0
        db = np.zeros(2)
        db[b_state] = 1.0
        P[lab] = Projector(Operator(np.kron(ip, np.kron(np.diag(da), np.diag(db)))))
    P["A"] = Projector(Operator(np.kron(ip, np.kron(np.diag([1.0, 0]), i2))))
    P["A*"] = Projector(Operator(np.kron(ip, np.kron(np.diag([0, 1.0]), i2))))
    P["B"] = Projector(Operator(np.kron(ip, np.kron(i2, np.diag([1.0, 0])))))
    P["B*"] = Projector(Operator(np.kron(ip, np.kron(i2, np.diag([0, 1.0])))))

    kets = {"Psi0": psi0}
    named_times = {}
    for v in master_values:
        name = f"Psi.{v}"
        kets[name] = Ket(evolved[v], name)
        P[name] = kets[name].projector()
        named_times[name] = midx[v]

    phib_mid_cell = source + (t_a + 1)
    phib = np.zeros(n_part, dtype=np.complex128)
    phib[p_idx(phib_mid_cell, _RIGHT)] = 1.0
    P["phib.AB"] = Projector(Operator(np.outer(np.kron(phib, ready), np.kron(phib, ready).conj())))

    # -- decompositions --------------------------------------------------------

    interval_dec = DecompositionOfIdentity(
        tuple((f"int{k}", P[f"int{k}"]) for k in range(len(intervals)))
        + (("abs", P["abs"]),)
    )
    det_dec = DecompositionOfIdentity(
        tuple((lab, P[lab]) for lab in ("A*B", "AB", "AB*", "A*B*"))
    )

    def with_rest(*members: tuple[str, Projector]) -> DecompositionOfIdentity:
        total = sum(p.mat for _, p in members)
        rest = np.eye(dim, dtype=np.complex128) - total
        out = list(members)
        if np.linalg.norm(rest) > 1e-12:
            out.append(("rest", Projector(Operator(rest))))
        return DecompositionOfIdentity(tuple(out))

    def psi_dec(v: int) -> DecompositionOfIdentity:
        return with_rest((f"Psi.{v}", P[f"Psi.{v}"]))

    a1_label = f"int{interval_of[source - mid]}"
    b1_label = f"int{interval_of[source + mid]}"
    g1_t1 = with_rest(
        ("a1.AB", Projector(Operator(P[a1_label].mat @ P["AB"].mat))),
        ("b1.AB", Projector(Operator(P[b1_label].mat @ P["AB"].mat))),
    )
    g2_t2 = with_rest(
        ("A*B", P["A*B"]),
        ("phib.AB", Projector(Operator(P["phib.AB"].mat @ P["AB"].mat))),
    )

    f_idx = tuple(midx[v] for v in f_times)
    g_idx = tuple(midx[v] for v in g_times)

    fam = {
        "F0": Family.pure(
            ps, f_idx, psi0, [psi_dec(v) for v in f_times[1:]], name="F0"
        ),
        "F1": Family.pure(ps, f_idx, psi0, [interval_dec] * 3, name="F1"),
        "F2": Family.pure(
            ps, f_idx, psi0, [psi_dec(f_times[1]), interval_dec, interval_dec], name="F2"
        ),
        "F2-remerge": Family.pure(
            ps,
            f_idx,
            psi0,
            [psi_dec(f_times[1]), interval_dec, psi_dec(f_times[3])],
            name="F2-remerge",
        ),
        "G0": Family.pure(
            ps, g_idx, psi0, [psi_dec(v) for v in g_times[1:]], name="G0"
        ),
        "G1": Family.pure(ps, g_idx, psi0, [g1_t1, det_dec, det_dec], name="G1"),
        "G2": Family.pure(
            ps, g_idx, psi0, [psi_dec(g_times[1]), g2_t2, det_dec], name="G2"
        ),
    }

    # -- spacetime events -------------------------------------------------------

    dom = (-1.0, float(n_cells))
    events: dict[str, TaggedEvent] = {}
    for v in master_values[1:]:
        surface = Hypersurface.flat(float(v), *dom)
        for k, interval in enumerate(intervals):
            eid = f"int{k}-t{v}"
            events[eid] = TaggedEvent.local(
                eid, Region.at(interval, surface), projector=f"int{k}", time_index=midx[v]
            )
        for lab, cell in (("A", det_a), ("A*", det_a), ("B", det_b), ("B*", det_b)):
            eid = f"{lab}-t{v}"
            events[eid] = TaggedEvent.local(
                eid, Region.at([cell], surface), projector=lab, time_index=midx[v]
            )

    # Entangled wave-function events: the flat one at t = 1 and a steeply
    # boosted one whose arm regions straddle it; embedding both is impossible.
    flat1 = Hypersurface.flat(1.0, *dom)
    events["psi-t1"] = TaggedEvent.entangled(
        "psi-t1",
        (Region.at([source - 1], flat1), Region.at([source + 1], flat1)),
        projector="Psi.1" if 1 in master_values else None,
        time_index=midx.get(1),
    )
    tilt = Hypersurface.line(
        -0.2 - 0.8 * (source - 2), 0.8, dom[0], dom[1]
    )  # passes (source-2, -0.2) with slope 0.8
    events["psi-boosted"] = TaggedEvent.entangled(
        "psi-boosted",
        (Region.at([source - 2], tilt), Region.at([source + 2], tilt)),
    )

    # Local trajectory events in a second frame: b-side packets on tilted
    # surfaces, for the interleaved-foliation construction.
    for j, (cell, t) in enumerate(
        ((source + 2, 2.0), (source + 4, 4.0)), start=1
    ):
        surf = Hypersurface.line(t - (cell / 3.0), 1.0 / 3.0, dom[0], dom[1])
        eid = f"bp{j}"
        events[eid] = TaggedEvent.local(eid, Region.at([cell], surf))

    # -- expected results --------------------------------------------------------

    a_branch = ("Psi0",) + tuple(
        f"int{interval_of[source - v]}" for v in f_times[1:]
    )
    b_branch = ("Psi0",) + tuple(
        f"int{interval_of[source + v]}" for v in f_times[1:]
    )
    g1_a = ("Psi0", "a1.AB", "A*B", "A*B")
    g1_b = ("Psi0", "b1.AB", "AB", "AB*")

    expected = (
        Expectation(
            "F1 support holds exactly the two trajectory histories",
            PROVENANCE_PAPER,
            lambda s: float(len(support(s.family("F1")))),
            2.0,
        ),
        Expectation(
            "F1: the A-bound trajectory has probability 1/2",
            PROVENANCE_PAPER,
            lambda s: probabilities(s.family("F1")).probability(a_branch),
            0.5,
        ),
        Expectation(
            "F1: the B-bound trajectory has probability 1/2",
            PROVENANCE_PAPER,
            lambda s: probabilities(s.family("F1")).probability(b_branch),
            0.5,
        ),
        Expectation(
            "F0: the unitary history has probability one",
            PROVENANCE_TRIVIAL,
            lambda s: probabilities(s.family("F0")).probability(
                ("Psi0",) + tuple(f"Psi.{v}" for v in f_times[1:])
            ),
            1.0,
        ),
        Expectation(
            "F2: delayed split into trajectories, 1/2 each",
            PROVENANCE_PAPER,
            lambda s: probabilities(s.family("F2")).probability(
                ("Psi0", f"Psi.{f_times[1]}", a_branch[2], a_branch[3])
            ),
            0.5,
        ),
        Expectation(
            "re-merging the trajectories onto the superposition is inconsistent",
            PROVENANCE_PAPER,
            lambda s: float(consistency_check(s.family("F2-remerge")).consistent),
            0.0,
            tolerance=0.0,
        ),
        Expectation(
            "F2-remerge: normalized off-diagonal overlap is maximal",
            PROVENANCE_DERIVED,
            lambda s: consistency_check(s.family("F2-remerge")).max_normalized_overlap,
            1.0,
        ),
        Expectation(
            "G0: unitary evolution through both MQS states has probability one",
            PROVENANCE_TRIVIAL,
            lambda s: probabilities(s.family("G0")).probability(
                ("Psi0",) + tuple(f"Psi.{v}" for v in g_times[1:])
            ),
            1.0,
        ),
        Expectation(
            "G1: detection by A caps the A-bound trajectory, probability 1/2",
            PROVENANCE_DERIVED,
            lambda s: probabilities(s.family("G1")).probability(g1_a),
            0.5,
        ),
        Expectation(
            "G1: detection by B caps the B-bound trajectory, probability 1/2",
            PROVENANCE_DERIVED,
            lambda s: probabilities(s.family("G1")).probability(g1_b),
            0.5,
        ),
        Expectation(
            "G1 inference: A untriggered implies the particle headed to B",
            PROVENANCE_PAPER,
            lambda s: conditional_probability(
                s.family("G1"),
                {tlab[g_times[1]]: "b1.AB"},
                {tlab[g_times[2]]: "AB"},
            ),
            1.0,
        ),
        Expectation(
            "G1 retrodiction: A triggered implies the particle came from the a side",
            PROVENANCE_PAPER,
            lambda s: conditional_probability(
                s.family("G1"),
                {tlab[g_times[1]]: "a1.AB"},
                {tlab[g_times[2]]: "A*B"},
            ),
            1.0,
        ),
        Expectation(
            "G2: collapse-style branches are equiprobable",
            PROVENANCE_DERIVED,
            lambda s: probabilities(s.family("G2")).probability(
                ("Psi0", f"Psi.{g_times[1]}", "A*B", "A*B")
            ),
            0.5,
        ),
        Expectation(
            "F0 and F1 are kinematically incompatible",
            PROVENANCE_PAPER,
            lambda s: float(
                common_refinement(s.family("F0"), s.family("F1")).classification
                == CLASS_KINEMATIC
            ),
            1.0,
            tolerance=0.0,
        ),
        Expectation(
            "spacelike interval vs detector-ready Heisenberg projectors commute",
            PROVENANCE_DERIVED,
            lambda s: commutation_check(
                s,
                s.events[f"int{interval_of[source - mid]}-t{mid}"],
                s.events[f"B-t{mid}"],
            ).norm,
            0.0,
            tolerance=1e-12,
        ),
    )

    return Scenario(
        name="wavepacket",
        propagators=ps,
        kets=kets,
        projectors=P,
        families=fam,
        events=events,
        expected=expected,
        named_times=named_times,
        description=(
            "A single particle in a left/right superposition on a cell lattice "
            "with two absorbing detectors: trajectory families, unitary MQS "
            "families, collapse-style families, and detection inferences."
        ),
    )
