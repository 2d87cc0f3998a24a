"""Histories, families, chain operators, weights, and consistency checking.

A history is a sequence of projectors, one per grid time, drawn from a fixed
decomposition of the identity at each time; a family is the sample space of
all such sequences, optionally conditioned on an initial pure state or
density operator.  Each history gets a chain operator (the time-ordered
product of its Heisenberg projectors), whose pairwise inner products form
the decoherence functional.  Vanishing off-diagonal entries make the family
consistent, i.e. a valid sample space for probabilities; the single
framework rule is enforced at the API boundary by refusing to assign
probabilities to inconsistent families.

The history Hilbert space (the formal tensor product over times) is never
materialized: histories are label tuples, and the Boolean event algebra is
represented by subsets of those labels.  All computations factor through
chain operators on the reference space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .dynamics import PropagatorSet
from .hilbert import (
    DecompositionOfIdentity,
    DensityOperator,
    Ket,
    Operator,
    TOL_NORM,
)

# Label used for the trivial {I} decomposition member (automatic extension).
IDENTITY_LABEL = "I"

# Consistency thresholds: a pair (alpha, beta) violates when
# |<K_a, K_b>| > EPS_ABS + EPS_REL * sqrt(W_a * W_b).  "Approximately
# consistent" has no canonical quantification; these are engineering choices
# placed orders of magnitude above rounding noise yet far below any physical
# overlap in the bundled models.  The sqrt(W_a W_b) normalization makes the
# verdict invariant under global rescaling of the initial state.
EPS_ABS = 1e-12
EPS_REL = 1e-10

# Histories below this probability are excluded from the support.
EPS_SUPPORT = 1e-12

# Chain-operator prefixes below this norm are exact zeros for all practical
# purposes (far below any representable physical amplitude) and are pruned.
_PRUNE_NORM = 1e-140

# Refuse to enumerate absurdly large sample spaces.
_MAX_HISTORIES = 250_000


class UnknownLabelError(KeyError):
    """A slot or history label does not resolve in the family."""


class InconsistentFamilyError(Exception):
    """Probabilities were requested for a family violating the consistency
    conditions; the single framework rule forbids assigning them."""

    def __init__(self, report: "ConsistencyReport", name: str | None = None):
        self.report = report
        fam = f"family {name!r}" if name else "family"
        super().__init__(
            f"{fam} violates the consistency conditions "
            f"(max normalized overlap {report.max_normalized_overlap:.3e}); "
            "the single framework rule forbids assigning it probabilities"
        )


class ZeroConditionProbabilityError(ValueError):
    """Conditioning event has zero probability."""


class FamilyTooLargeError(ValueError):
    """Sample-space enumeration would exceed the configured bound."""


@dataclass(frozen=True)
class History:
    """One history: a label per family time (or the identity marker)."""

    slots: tuple[str, ...]

    def __str__(self) -> str:
        return " (+) ".join(self.slots)


@dataclass(frozen=True, eq=False)
class PureInitial:
    """Pure initial condition: a unit-norm ket pinned to one slot."""

    ket: Ket
    label: str


@dataclass(frozen=True, eq=False)
class MixedInitial:
    """Density-operator initial condition, anchored at one slot's time."""

    rho: DensityOperator


@dataclass(frozen=True, eq=False)
class Family:
    """A time grid, one decomposition of the identity per time, optional
    initial condition, and the dynamics connecting the times.

    ``time_indices`` select times from the master grid of ``propagators``;
    framework operations (extension, refinement, compatibility) rely on every
    family being anchored in such a master grid.
    """

    propagators: PropagatorSet
    time_indices: tuple[int, ...]
    decompositions: tuple[DecompositionOfIdentity, ...]
    initial: PureInitial | MixedInitial | None = None
    initial_slot: int = 0
    name: str | None = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.time_indices)
        if not idx:
            raise ValueError("a family needs at least one time")
        n = len(self.propagators.grid)
        if any(i < 0 or i >= n for i in idx):
            raise ValueError(f"time indices {idx} out of range for grid of {n} times")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("family times must be strictly increasing")
        decs = tuple(self.decompositions)
        if len(decs) != len(idx):
            raise ValueError("one decomposition per family time")
        for d in decs:
            if d.dim != self.propagators.dim:
                raise ValueError("decomposition dimension does not match the dynamics")
        if self.initial is not None:
            slot = self.initial_slot
            if not (0 <= slot < len(idx)):
                raise ValueError("initial_slot out of range")
            if isinstance(self.initial, PureInitial) and slot not in (0, len(idx) - 1):
                # fixed-initial-state histories pin the state at the first time
                # (or the last, after time reversal); middle anchors are not a
                # history shape this engine builds
                raise ValueError("a pure initial state anchors at the first or last time")
            if isinstance(self.initial, PureInitial):
                ket = self.initial.ket
                if abs(ket.norm() - 1.0) >= TOL_NORM:
                    raise ValueError("initial state must have unit norm")
                if len(decs[slot]) > 2:
                    raise ValueError(
                        "the anchored decomposition must be {initial, complement}"
                    )
                member = decs[slot].projector(self.initial.label)
                if not member.op.allclose(ket.projector().op):
                    raise ValueError(
                        "anchored decomposition member does not project onto the initial state"
                    )
            elif isinstance(self.initial, MixedInitial):
                if self.initial.rho.dim != self.propagators.dim:
                    raise ValueError("initial density operator dimension mismatch")
        object.__setattr__(self, "time_indices", idx)
        object.__setattr__(self, "decompositions", decs)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def pure(
        cls,
        propagators: PropagatorSet,
        time_indices: Sequence[int],
        initial: Ket,
        decompositions: Sequence[DecompositionOfIdentity],
        name: str | None = None,
    ) -> "Family":
        """Family with a fixed pure initial state at the first time.

        ``decompositions`` cover the times after the first; the first-time
        decomposition is the canonical {initial, complement} pair.
        """
        label = initial.label or "psi0"
        d0 = DecompositionOfIdentity.from_projector(initial.projector(), label)
        return cls(
            propagators,
            tuple(time_indices),
            (d0, *decompositions),
            PureInitial(initial, label),
            0,
            name,
        )

    @classmethod
    def general(
        cls,
        propagators: PropagatorSet,
        time_indices: Sequence[int],
        decompositions: Sequence[DecompositionOfIdentity],
        rho: DensityOperator | None = None,
        name: str | None = None,
    ) -> "Family":
        initial = MixedInitial(rho) if rho is not None else None
        return cls(propagators, tuple(time_indices), tuple(decompositions), initial, 0, name)

    # -- basic queries ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.propagators.dim

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(self.propagators.grid.values[i] for i in self.time_indices)

    @property
    def time_labels(self) -> tuple[str, ...]:
        return tuple(self.propagators.grid.labels[i] for i in self.time_indices)

    def __len__(self) -> int:
        return len(self.time_indices)

    def slot_of_time_label(self, label: str) -> int:
        try:
            return self.time_labels.index(label)
        except ValueError:
            raise UnknownLabelError(f"family has no time labeled {label!r}") from None

    def slot_labels(self, slot: int) -> tuple[str, ...]:
        """Labels enumerable at a slot (the anchored slot is pinned)."""
        if isinstance(self.initial, PureInitial) and slot == self.initial_slot:
            return (self.initial.label,)
        return self.decompositions[slot].labels

    def n_histories(self) -> int:
        n = 1
        for slot in range(len(self)):
            n *= len(self.slot_labels(slot))
        return n

    def alphas(self) -> tuple[tuple[str, ...], ...]:
        """All history label tuples, in deterministic enumeration order."""
        if self.n_histories() > _MAX_HISTORIES:
            raise FamilyTooLargeError(
                f"family enumerates {self.n_histories()} histories (cap {_MAX_HISTORIES})"
            )
        return tuple(itertools.product(*(self.slot_labels(s) for s in range(len(self)))))

    def histories(self) -> tuple[History, ...]:
        return tuple(History(a) for a in self.alphas())

    def resolve(self, alpha: Sequence[str]) -> History:
        """Validate a label tuple against the family's decompositions."""
        slots = tuple(alpha)
        if len(slots) != len(self):
            raise UnknownLabelError(
                f"history has {len(slots)} slots, family has {len(self)} times"
            )
        for slot, label in enumerate(slots):
            if label not in self.decompositions[slot].labels:
                raise UnknownLabelError(
                    f"label {label!r} not in the decomposition at time "
                    f"{self.time_labels[slot]}"
                )
        return History(slots)

    def rename(self, name: str) -> "Family":
        return Family(
            self.propagators, self.time_indices, self.decompositions,
            self.initial, self.initial_slot, name,
        )


# -- chain operators and the decoherence functional ---------------------------


@dataclass(frozen=True, eq=False)
class ChainOperator:
    """The operator assigned to a history on the reference space."""

    history: History
    op: Operator


def _heisenberg_members(f: Family, ref: int) -> list[dict[str, np.ndarray]]:
    """Per-slot map label -> Heisenberg projector matrix at the reference."""
    out = []
    for slot, dec in enumerate(f.decompositions):
        j = f.time_indices[slot]
        slot_map = {}
        for label, proj in dec.members:
            slot_map[label] = f.propagators.heisenberg_matrix(proj.mat, j, ref)
        out.append(slot_map)
    return out


def _heisenberg_initial_ket(f: Family, ref: int) -> np.ndarray:
    assert isinstance(f.initial, PureInitial)
    j = f.time_indices[f.initial_slot]
    t = f.propagators.propagator(ref, j).mat
    return t @ f.initial.ket.amps


@dataclass(frozen=True, eq=False)
class _Analysis:
    """Chain payloads and the decoherence functional for one family."""

    alphas: tuple[tuple[str, ...], ...]
    weights: np.ndarray          # clamped, >= 0, per alpha
    raw_weights: np.ndarray      # before clamping
    nonzero: tuple[int, ...]     # indices into alphas with surviving chains
    gram: np.ndarray             # decoherence matrix among nonzero chains
    total_weight: float


_analysis_cache: dict[tuple[int, int], _Analysis] = {}
_analysis_keepalive: dict[int, Family] = {}


def _analyze(f: Family, ref: int = 0) -> _Analysis:
    key = (id(f), ref)
    hit = _analysis_cache.get(key)
    if hit is not None and _analysis_keepalive.get(id(f)) is f:
        return hit

    members = _heisenberg_members(f, ref)
    n_slots = len(f)
    pure = isinstance(f.initial, PureInitial)
    mixed = isinstance(f.initial, MixedInitial)

    if pure:
        seed = _heisenberg_initial_ket(f, ref)
        anchor = f.initial_slot
        if anchor == 0:
            order = list(range(1, n_slots))
        else:
            order = list(range(n_slots - 2, -1, -1))
    else:
        anchor = None
        order = list(range(n_slots))
        if mixed:
            rho = f.initial.rho
            j = f.time_indices[f.initial_slot]
            rho_h = f.propagators.heisenberg_matrix(rho.mat, j, ref)
            evals, evecs = np.linalg.eigh(rho_h)
            evals = np.clip(evals, 0.0, None)
            sqrt_rho = (evecs * np.sqrt(evals)) @ evecs.conj().T
            seed = sqrt_rho
        else:
            seed = np.eye(f.dim, dtype=np.complex128)

    alphas = f.alphas()
    payloads: list[np.ndarray | None] = [None] * len(alphas)

    # Strides to map a path of slot choices to the enumeration index.
    sizes = [len(f.slot_labels(s)) for s in range(n_slots)]
    strides = [1] * n_slots
    for s in range(n_slots - 2, -1, -1):
        strides[s] = strides[s + 1] * sizes[s + 1]

    def walk(depth: int, payload: np.ndarray, base: int):
        if depth == len(order):
            payloads[base] = payload
            return
        slot = order[depth]
        labels = f.slot_labels(slot)
        for pos, label in enumerate(labels):
            mat = members[slot][label]
            nxt = mat @ payload if payload.ndim == 1 else payload @ mat
            idx = base + pos * strides[slot]
            if np.linalg.norm(nxt) < _PRUNE_NORM:
                continue  # exact zero for this whole subtree
            walk(depth + 1, nxt, idx)

    walk(0, seed, 0)

    nonzero = tuple(i for i, p in enumerate(payloads) if p is not None)
    if nonzero:
        flat = np.stack([payloads[i].ravel() for i in nonzero])
        gram = flat.conj() @ flat.T
    else:
        gram = np.zeros((0, 0), dtype=np.complex128)

    raw = np.zeros(len(alphas))
    for row, i in enumerate(nonzero):
        raw[i] = gram[row, row].real
    bad = raw < -EPS_ABS
    if np.any(bad):
        raise ValueError(f"negative weight {raw[bad].min():.3e}; numerical failure")
    weights = np.clip(raw, 0.0, None)

    analysis = _Analysis(
        alphas=alphas,
        weights=weights,
        raw_weights=raw,
        nonzero=nonzero,
        gram=gram,
        total_weight=float(weights.sum()),
    )
    if len(_analysis_cache) > 256:
        _analysis_cache.clear()
        _analysis_keepalive.clear()
    _analysis_cache[key] = analysis
    _analysis_keepalive[id(f)] = f
    return analysis


def chain_operator(h: History | Sequence[str], f: Family, ref: int = 0) -> ChainOperator:
    """Chain operator of one history, in Heisenberg form on the reference space.

    Identity slots contribute identity factors; a label mismatch with the
    family raises.  The returned operator K satisfies
    ``K^dag = P_0 P_1 ... P_f`` (Heisenberg projectors in time order, with the
    initial-state projector included when the family has a pure initial).
    """
    hist = f.resolve(h.slots if isinstance(h, History) else h)
    members = _heisenberg_members(f, ref)
    d = f.dim
    adj = np.eye(d, dtype=np.complex128)
    for slot, label in enumerate(hist.slots):
        adj = adj @ members[slot][label]
    return ChainOperator(hist, Operator(adj.conj().T))


def chain_operator_schrodinger(h: History | Sequence[str], f: Family) -> ChainOperator:
    """Chain operator built from the two-time propagators directly.

    ``K^dag = P_0 T(t_0,t_1) P_1 T(t_1,t_2) ... P_f`` with the projectors in
    their native per-time form.  Mathematically equal to the Heisenberg form
    with reference index 0 up to rounding; kept as an independent cross-check
    path.
    """
    hist = f.resolve(h.slots if isinstance(h, History) else h)
    d = f.dim
    adj = np.eye(d, dtype=np.complex128)
    for slot, label in enumerate(hist.slots):
        proj = f.decompositions[slot].projector(label)
        adj = adj @ proj.mat
        if slot + 1 < len(hist.slots):
            j, k = f.time_indices[slot], f.time_indices[slot + 1]
            adj = adj @ f.propagators.propagator(j, k).mat
    # Map back to the reference space of time index 0 for comparability.
    t0f = f.propagators.propagator(f.time_indices[0], f.time_indices[-1]).mat
    first = f.propagators.propagator(0, f.time_indices[0]).mat
    adj = first @ adj @ t0f.conj().T @ first.conj().T
    return ChainOperator(hist, Operator(adj.conj().T))


def weight(h: History | Sequence[str], f: Family, ref: int = 0) -> float:
    """Generalized Born weight ``<K, K>`` of one history.

    Uses the trace inner product, or its density-weighted form when the
    family carries a density-operator initial condition.  With a pure
    initial state the sample space pins that state's slot, so a history
    carrying the complementary member there has weight zero under the
    initial condition.
    """
    hist = f.resolve(h.slots if isinstance(h, History) else h)
    analysis = _analyze(f, ref)
    try:
        idx = analysis.alphas.index(hist.slots)
    except ValueError:
        # Pure-initial families pin the anchored slot; histories leaving the
        # initial state have zero weight by the initial condition.
        if isinstance(f.initial, PureInitial):
            return 0.0
        raise UnknownLabelError(f"history {hist.slots} is not in the sample space") from None
    return float(analysis.weights[idx])


# -- consistency ---------------------------------------------------------------


@dataclass(frozen=True)
class ConsistencyReport:
    """Result of evaluating the decoherence functional's off-diagonals."""

    consistent: bool
    violations: tuple[tuple[tuple[str, ...], tuple[str, ...], float], ...]
    max_normalized_overlap: float
    eps_abs: float = EPS_ABS
    eps_rel: float = EPS_REL
    mode: str = "complex"

    def __bool__(self) -> bool:
        return self.consistent

    def to_dict(self) -> dict:
        return {
            "consistent": self.consistent,
            "max_normalized_overlap": self.max_normalized_overlap,
            "mode": self.mode,
            "violations": [
                {"alpha": list(a), "beta": list(b), "overlap": o}
                for a, b, o in self.violations
            ],
        }


def consistency_check(
    f: Family,
    eps_abs: float = EPS_ABS,
    eps_rel: float = EPS_REL,
    mode: str = "complex",
    ref: int = 0,
) -> ConsistencyReport:
    """Evaluate all distinct chain-operator pairs for mutual orthogonality.

    A pair violates when its (full complex) inner product exceeds
    ``eps_abs + eps_rel * sqrt(W_a W_b)``.  Histories of zero weight have
    vanishing chain operators and never violate.  ``mode="real"`` tests only
    the real part (the weaker variant some authors adopt); the default tests
    the full condition.
    """
    if mode not in ("complex", "real"):
        raise ValueError(f"mode must be 'complex' or 'real', got {mode!r}")
    analysis = _analyze(f, ref)
    n = len(analysis.nonzero)
    violations = []
    max_norm = 0.0
    for a in range(n):
        wa = analysis.gram[a, a].real
        for b in range(a + 1, n):
            wb = analysis.gram[b, b].real
            d = analysis.gram[a, b]
            overlap = abs(d.real) if mode == "real" else abs(d)
            if wa > 0.0 and wb > 0.0:
                max_norm = max(max_norm, overlap / np.sqrt(wa * wb))
            if overlap > eps_abs + eps_rel * np.sqrt(max(wa, 0.0) * max(wb, 0.0)):
                ia, ib = analysis.nonzero[a], analysis.nonzero[b]
                violations.append((analysis.alphas[ia], analysis.alphas[ib], float(overlap)))
    violations.sort(key=lambda v: -v[2])
    return ConsistencyReport(
        consistent=not violations,
        violations=tuple(violations),
        max_normalized_overlap=float(max_norm),
        eps_abs=eps_abs,
        eps_rel=eps_rel,
        mode=mode,
    )


# -- probabilities --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeightTable:
    """Weights per history plus the normalization that turns them into
    probabilities.  With a unit-norm pure initial state the normalization
    is 1 up to rounding."""

    entries: tuple[tuple[tuple[str, ...], float], ...]
    normalization: float

    def probability(self, alpha: Sequence[str]) -> float:
        key = tuple(alpha)
        for a, w in self.entries:
            if a == key:
                return w / self.normalization
        raise UnknownLabelError(f"history {key} not in the table")

    def items(self) -> tuple[tuple[tuple[str, ...], float], ...]:
        """(alpha, probability) pairs in enumeration order."""
        return tuple((a, w / self.normalization) for a, w in self.entries)

    def total_weight(self) -> float:
        return float(sum(w for _, w in self.entries))

    def to_dict(self) -> dict:
        return {
            "normalization": self.normalization,
            "entries": [
                {"history": list(a), "weight": w, "probability": w / self.normalization}
                for a, w in self.entries
            ],
        }


def weight_table(f: Family, ref: int = 0) -> WeightTable:
    """All weights, without enforcing consistency (internal/diagnostic use)."""
    analysis = _analyze(f, ref)
    entries = tuple(
        (alpha, float(w)) for alpha, w in zip(analysis.alphas, analysis.weights)
    )
    norm = analysis.total_weight
    if norm <= 0.0:
        raise ValueError("family has zero total weight; cannot normalize")
    return WeightTable(entries=entries, normalization=norm)


def probabilities(f: Family, ref: int = 0) -> WeightTable:
    """Probabilities over the family's sample space.

    Refuses inconsistent families: probabilities only make sense within a
    single consistent framework.
    """
    report = consistency_check(f, ref=ref)
    if not report.consistent:
        raise InconsistentFamilyError(report, f.name)
    return weight_table(f, ref)


Predicate = Callable[[tuple[str, ...]], bool]


def slot_predicate(f: Family, spec: Mapping[str, str | Iterable[str]] | Predicate) -> Predicate:
    """Build a history predicate from {time_label: member_label(s)} or pass
    through a callable.  String values may offer alternatives joined by '|'."""
    if callable(spec):
        return spec
    wanted: list[tuple[int, frozenset[str]]] = []
    for time_label, member in spec.items():
        slot = f.slot_of_time_label(time_label)
        if isinstance(member, str):
            options = frozenset(member.split("|"))
        else:
            options = frozenset(member)
        known = set(f.decompositions[slot].labels)
        if isinstance(f.initial, PureInitial) and slot == f.initial_slot:
            known.add(f.initial.label)
        unknown = options - known
        if unknown:
            raise UnknownLabelError(
                f"labels {sorted(unknown)} not in the decomposition at {time_label}"
            )
        wanted.append((slot, options))

    def pred(alpha: tuple[str, ...]) -> bool:
        return all(alpha[slot] in options for slot, options in wanted)

    return pred


def conditional_probability(
    f: Family,
    target: Mapping[str, str | Iterable[str]] | Predicate,
    given: Mapping[str, str | Iterable[str]] | Predicate,
    ref: int = 0,
) -> float:
    """``Pr(target | given)`` over a consistent family's sample space."""
    table = probabilities(f, ref)
    tpred = slot_predicate(f, target)
    gpred = slot_predicate(f, given)
    p_given = 0.0
    p_both = 0.0
    for alpha, pr in table.items():
        if gpred(alpha):
            p_given += pr
            if tpred(alpha):
                p_both += pr
    if p_given <= EPS_SUPPORT:
        raise ZeroConditionProbabilityError(
            f"conditioning event has probability {p_given:.3e}"
        )
    return p_both / p_given


def support(f: Family, ref: int = 0) -> tuple[tuple[tuple[str, ...], float], ...]:
    """Histories with probability above ``EPS_SUPPORT``, sorted descending."""
    table = probabilities(f, ref)
    items = [(a, p) for a, p in table.items() if p > EPS_SUPPORT]
    items.sort(key=lambda ap: -ap[1])
    return tuple(items)


def event_probability(
    f: Family, subset: Iterable[Sequence[str]], ref: int = 0
) -> float:
    """Probability of an event: a subset of the family's histories.

    Additive over disjoint subsets by construction.
    """
    table = probabilities(f, ref)
    keys = set()
    for alpha in subset:
        hist = f.resolve(alpha)
        keys.add(hist.slots)
    return float(sum(p for a, p in table.items() if a in keys))


def histories_with_slots(f: Family, labels: Iterable[str]) -> tuple[tuple[str, ...], ...]:
    """All histories whose slot labels include every given label."""
    need = list(labels)
    all_known = set()
    for slot in range(len(f)):
        all_known.update(f.slot_labels(slot))
        all_known.update(f.decompositions[slot].labels)
    for lab in need:
        if lab not in all_known:
            raise UnknownLabelError(f"label {lab!r} not used anywhere in the family")
    return tuple(a for a in f.alphas() if all(lab in a for lab in need))


# -- time reversal ---------------------------------------------------------------


def time_reverse(f: Family) -> Family:
    """The family read backwards in time.

    Chain operators of the reversed family are the adjoints of the originals,
    so weights and the consistency verdict are unchanged.  Density-operator
    initial conditions are inherently time-directed and cannot be reversed.
    """
    if isinstance(f.initial, MixedInitial):
        raise ValueError("time reversal is undefined for density-operator initial conditions")
    ps = f.propagators
    n = len(ps.grid)
    rev_values = tuple(-v for v in reversed(ps.grid.values))
    rev_labels = tuple(reversed(ps.grid.labels))
    from .dynamics import TimeGrid  # local to avoid import cycles in tooling

    rev_grid = TimeGrid(rev_values, rev_labels)
    rev_steps = tuple(s.dagger() for s in reversed(ps.steps))
    rev_ps = PropagatorSet(rev_grid, rev_steps, space_dim=ps.dim)
    rev_indices = tuple(sorted(n - 1 - i for i in f.time_indices))
    rev_decs = tuple(reversed(f.decompositions))
    slot = None if f.initial is None else len(f.time_indices) - 1 - f.initial_slot
    return Family(
        rev_ps,
        rev_indices,
        rev_decs,
        f.initial,
        slot if slot is not None else 0,
        (f.name + "-reversed") if f.name else None,
    )
