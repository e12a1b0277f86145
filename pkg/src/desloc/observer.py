"""Uncertainty-set machinery for a supervisor under partial observation.

The observer automaton is the subset construction of the supervisor over its
observable events: its states are uncertainty sets (the supervisor states
reachable by lookalike strings), canonicalized as sorted bitsets and numbered
in BFS discovery order.  On top of it live the per-event enable/disable rows
and the two marking rows that drive localization.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Mapping

from .automata import Alphabet, Generator, GeneratorError, determinize, selfloop


@dataclass(frozen=True)
class UncertaintySet:
    """Nonempty set of supervisor state indices, kept sorted."""

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise GeneratorError("uncertainty set must be nonempty")
        if tuple(sorted(set(self.members))) != self.members:
            raise GeneratorError("uncertainty set members must be sorted and unique")

    @staticmethod
    def from_mask(mask: int) -> "UncertaintySet":
        members = []
        q = 0
        while mask:
            if mask & 1:
                members.append(q)
            mask >>= 1
            q += 1
        return UncertaintySet(tuple(members))

    @property
    def mask(self) -> int:
        m = 0
        for q in self.members:
            m |= 1 << q
        return m

    def __contains__(self, state: int) -> bool:
        return state in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


class ObserverAutomaton:
    """Deterministic automaton over the observable events whose states are
    uncertainty sets of the supervisor it was built from."""

    def __init__(self, sup: Generator, usets, initial, marked, transitions: Mapping):
        self.sup = sup
        self.usets: tuple[UncertaintySet, ...] = tuple(usets)
        self.initial: int | None = initial
        self.marked: frozenset[int] = frozenset(marked)
        self.transitions: dict[tuple[int, int], int] = dict(transitions)
        self._index = {u.members: i for i, u in enumerate(self.usets)}

    @property
    def num_usets(self) -> int:
        return len(self.usets)

    @property
    def observable_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.sup.alphabet.observable))

    def step(self, uset_index: int, event_id: int) -> int | None:
        return self.transitions.get((uset_index, event_id))

    def index_of(self, members) -> int | None:
        return self._index.get(tuple(sorted(members)))

    def as_generator(self, name: str | None = None) -> Generator:
        """The observer as a plain generator over the observable alphabet."""
        alphabet = self.sup.alphabet.restrict(self.sup.alphabet.observable)
        if self.initial is None:
            return Generator.empty(alphabet, name or f"observer({self.sup.name})")
        return Generator(
            alphabet,
            self.num_usets,
            [(s, e, d) for (s, e), d in self.transitions.items()],
            self.initial,
            self.marked,
            name or f"observer({self.sup.name})",
        )

    def __repr__(self) -> str:
        return f"<observer of {self.sup.name or 'sup'}: {self.num_usets} uncertainty sets>"


def build_observer(sup: Generator) -> ObserverAutomaton:
    """Subset construction of the supervisor over its observable events.

    A target uncertainty set collects every supervisor state reachable from
    the source set by one observable event padded with unobservable strings
    on both sides; a set is marked iff it contains a marked supervisor state.
    """
    masks, initial, marked, transitions = determinize(sup, sup.alphabet.observable)
    usets = [UncertaintySet.from_mask(m) for m in masks]
    return ObserverAutomaton(sup, usets, initial, marked, transitions)


def feasible_form(observer: ObserverAutomaton, sup: Generator) -> Generator:
    """Observer with an unobservable-event selfloop at every uncertainty set
    containing a state where that event is defined — the feasible supervisor
    realization over the full alphabet."""
    if observer.sup is not sup and observer.sup != sup:
        raise GeneratorError("observer was not built from this supervisor")
    g = observer.as_generator(name=f"feasible({sup.name})")
    for eid in sorted(sup.alphabet.unobservable):
        event = sup.alphabet[eid]
        at = [
            i for i, u in enumerate(observer.usets)
            if any(sup.step(x, eid) is not None for x in u)
        ]
        g = selfloop(g, [event], at=at)
    return g.with_name(f"feasible({sup.name})")


class ControlStatus(enum.Enum):
    ENABLED = "enabled"
    DISABLED = "disabled"
    UNDEFINED = "undefined"


def _consistent_triples(plant: Generator, sup: Generator,
                        observer: ObserverAutomaton) -> set[tuple[int, int, int]]:
    """All (plant state, sup state, uncertainty set) triples reached by one
    common string, with the set tracking the string's observation."""
    if sup.is_empty or plant.is_empty or observer.initial is None:
        return set()
    sigma_o = sup.alphabet.observable
    start = (plant.initial, sup.initial, observer.initial)
    seen = {start}
    stack = [start]
    while stack:
        q, x, u = stack.pop()
        for e, tx in sup.successors(x):
            tq = plant.step(q, e)
            if tq is None:
                raise GeneratorError(
                    f"supervisor fires event {e} outside the plant at state {x}")
            tu = observer.step(u, e) if e in sigma_o else u
            if tu is None:
                raise GeneratorError(
                    f"observer misses event {e} at uncertainty set {u}")
            triple = (tq, tx, tu)
            if triple not in seen:
                seen.add(triple)
                stack.append(triple)
    return seen


def classify(x: int, uset_index: int, event_id: int, plant: Generator,
             sup: Generator, observer: ObserverAutomaton) -> ControlStatus:
    """Status of a controllable event at one member of an uncertainty set.

    Enabled: the supervisor fires it there.  Disabled: the supervisor does
    not, yet the plant can after some string reaching x with this very
    uncertainty set.  Undefined: no such string exists.  The string
    quantification is decided by reachability over (plant, sup, observer)
    triples, never by string enumeration.
    """
    uset = observer.usets[uset_index]
    if x not in uset:
        raise GeneratorError(f"state {x} not a member of uncertainty set {uset_index}")
    if event_id not in sup.alphabet.controllable:
        raise GeneratorError(f"event {event_id} is not controllable")
    if sup.step(x, event_id) is not None:
        return ControlStatus.ENABLED
    for q, xx, u in _consistent_triples(plant, sup, observer):
        if xx == x and u == uset_index and plant.step(q, event_id) is not None:
            return ControlStatus.DISABLED
    return ControlStatus.UNDEFINED


@dataclass(frozen=True)
class ControlTables:
    """Per-event enable/disable rows plus the two marking rows, indexed by
    uncertainty set.

    ``sup_marked[u]`` says the set contains a marked supervisor state;
    ``plant_marked[u]`` says some string consistent with the set is marked in
    the plant.
    """

    events: tuple[int, ...]
    enable: Mapping[int, tuple[int, ...]]
    disable: Mapping[int, tuple[int, ...]]
    sup_marked: tuple[int, ...]
    plant_marked: tuple[int, ...]

    def num_usets(self) -> int:
        return len(self.sup_marked)

    def violations(self) -> list[str]:
        """Internal consistency: no row may both enable and disable, and a
        set holding a marked supervisor state is always plant-marked."""
        problems = []
        for alpha in self.events:
            for i, (e, d) in enumerate(zip(self.enable[alpha], self.disable[alpha])):
                if e and d:
                    problems.append(f"event {alpha} both enabled and disabled at set {i}")
        for i, (m, t) in enumerate(zip(self.sup_marked, self.plant_marked)):
            if m and not t:
                problems.append(f"set {i} marked in supervisor but not plant-markable")
        return problems


def control_tables(plant: Generator, sup: Generator,
                   observer: ObserverAutomaton) -> ControlTables:
    """Enable/disable rows for every controllable event and both marking rows."""
    events = tuple(sorted(sup.alphabet.controllable))
    n = observer.num_usets
    triples = _consistent_triples(plant, sup, observer)
    by_uset: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}
    for q, x, u in triples:
        by_uset[u].append((q, x))
    enable = {}
    disable = {}
    for alpha in events:
        e_row = [0] * n
        d_row = [0] * n
        for i, uset in enumerate(observer.usets):
            if any(sup.step(x, alpha) is not None for x in uset):
                e_row[i] = 1
            if any(sup.step(x, alpha) is None and plant.step(q, alpha) is not None
                   for q, x in by_uset[i]):
                d_row[i] = 1
        enable[alpha] = tuple(e_row)
        disable[alpha] = tuple(d_row)
    sup_marked = tuple(1 if i in observer.marked else 0 for i in range(n))
    plant_marked = tuple(
        1 if any(q in plant.marked for q, _ in by_uset[i]) else 0 for i in range(n)
    )
    return ControlTables(events, enable, disable, sup_marked, plant_marked)


@dataclass(frozen=True)
class ActionConsistency:
    ok: bool
    witness: tuple[int, int, int, int] | None = None  # (uset, enabled x, disabled x', event)

    def __bool__(self) -> bool:
        return self.ok


def check_action_consistency(plant: Generator, sup: Generator,
                             observer: ObserverAutomaton) -> ActionConsistency:
    """No uncertainty set may hold both an enabled and a disabled member for
    the same controllable event; holds whenever the supervisor's language is
    relatively observable."""
    triples = _consistent_triples(plant, sup, observer)
    by_uset: dict[int, set[tuple[int, int]]] = {}
    for q, x, u in triples:
        by_uset.setdefault(u, set()).add((q, x))
    for alpha in sorted(sup.alphabet.controllable):
        for i, uset in enumerate(observer.usets):
            enabled = [x for x in uset if sup.step(x, alpha) is not None]
            if not enabled:
                continue
            for q, x in sorted(by_uset.get(i, ())):
                if sup.step(x, alpha) is None and plant.step(q, alpha) is not None:
                    return ActionConsistency(False, (i, enabled[0], x, alpha))
    return ActionConsistency(True)


@dataclass(frozen=True)
class LocalizationInput:
    """Bundle handed to the localization stage."""

    observer: ObserverAutomaton
    tables: ControlTables
    controllable: tuple[int, ...]
    observable: tuple[int, ...]

    @staticmethod
    def from_supervisor(plant: Generator, sup: Generator) -> "LocalizationInput":
        observer = build_observer(sup)
        tables = control_tables(plant, sup, observer)
        return LocalizationInput(
            observer=observer,
            tables=tables,
            controllable=tuple(sorted(sup.alphabet.controllable)),
            observable=tuple(sorted(sup.alphabet.observable)),
        )
