"""Decomposition of a partial-observation supervisor into one local
controller per controllable event.

Uncertainty sets are grouped into control-consistent, transition-closed
cells (a control congruence); the quotient of the observer by those cells,
restricted to the events that actually move it, is the local controller.
Only observable events may change a controller's state; an unobservable
event controlled by it appears only as a selfloop where it is enabled.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .automata import (
    Alphabet,
    Generator,
    GeneratorError,
    language_equal,
    sync,
    trim,
)
from .observer import (
    ControlTables,
    LocalizationInput,
    ObserverAutomaton,
    build_observer,
    control_tables,
)


@dataclass(frozen=True)
class ConsistencyVerdict:
    pair: tuple[int, int]
    event: int
    consistent: bool
    failed_clause: str | None = None  # "enable-disable" or "marking"

    def __bool__(self) -> bool:
        return self.consistent


def control_consistent(u: int, v: int, event: int, tables: ControlTables) -> ConsistencyVerdict:
    """Two uncertainty sets agree on the event's control action and marking.

    Clause one: neither set enables the event while the other disables it.
    Clause two: if both carry (or both lack) plant-marked strings, they must
    agree on holding a marked supervisor state.  Symmetric in (u, v).
    """
    e_row = tables.enable[event]
    d_row = tables.disable[event]
    if e_row[u] and d_row[v] or e_row[v] and d_row[u]:
        return ConsistencyVerdict((u, v), event, False, "enable-disable")
    if (tables.plant_marked[u] == tables.plant_marked[v]
            and tables.sup_marked[u] != tables.sup_marked[v]):
        return ConsistencyVerdict((u, v), event, False, "marking")
    return ConsistencyVerdict((u, v), event, True)


@dataclass(frozen=True)
class ControlCongruence:
    """Partition of the uncertainty sets into control-consistent,
    transition-closed cells, ordered by least member."""

    event: int
    cells: tuple[frozenset[int], ...]

    def cell_of(self, uset_index: int) -> int:
        for i, cell in enumerate(self.cells):
            if uset_index in cell:
                return i
        raise GeneratorError(f"uncertainty set {uset_index} not covered")

    def violations(self, observer: ObserverAutomaton, tables: ControlTables) -> list[str]:
        """Re-check both defining clauses by direct scan."""
        problems = []
        covered: set[int] = set()
        for cell in self.cells:
            if covered & cell:
                problems.append("cells overlap")
            covered |= cell
        if covered != set(range(observer.num_usets)):
            problems.append("cells do not cover every uncertainty set")
        for ci, cell in enumerate(self.cells):
            members = sorted(cell)
            for i, u in enumerate(members):
                for v in members[i + 1:]:
                    if not control_consistent(u, v, self.event, tables):
                        problems.append(
                            f"cell {ci}: sets {u},{v} not control consistent")
            for e in sorted(observer.sup.alphabet.observable):
                targets = {observer.step(u, e) for u in members}
                targets.discard(None)
                target_cells = {self.cell_of(t) for t in targets}
                if len(target_cells) > 1:
                    problems.append(
                        f"cell {ci}: event {e} leads into cells {sorted(target_cells)}")
        return problems


def compute_congruence(event: int, inputs: LocalizationInput) -> ControlCongruence:
    """Merge uncertainty sets into a control congruence for one event.

    Starting from the singleton partition, two cells merge only if every
    cross pair is control consistent and, recursively, the cells their
    members reach under each shared observable event can merge as well.
    Candidate pairs are scanned in ascending order and the scan restarts
    after every successful merge, so the result is deterministic.
    """
    observer = inputs.observer
    tables = inputs.tables
    n = observer.num_usets
    obs_ids = sorted(inputs.observable)

    consistent = [
        [bool(control_consistent(u, v, event, tables)) for v in range(n)]
        for u in range(n)
    ]

    cells: list[frozenset[int]] = [frozenset([u]) for u in range(n)]

    def try_merge(a: int, b: int) -> list[frozenset[int]] | None:
        parent = list(range(len(cells)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        members = {i: set(cell) for i, cell in enumerate(cells)}
        cell_of = {}
        for i, cell in enumerate(cells):
            for u in cell:
                cell_of[u] = i
        queue = deque([(a, b)])
        while queue:
            i, j = queue.popleft()
            ri, rj = find(i), find(j)
            if ri == rj:
                continue
            for u in sorted(members[ri]):
                for v in sorted(members[rj]):
                    if not consistent[u][v]:
                        return None
            keep, drop = min(ri, rj), max(ri, rj)
            parent[drop] = keep
            members[keep] |= members[drop]
            merged = members[keep]
            for e in obs_ids:
                target_cells = sorted({
                    find(cell_of[t])
                    for t in (observer.step(u, e) for u in merged)
                    if t is not None
                })
                for other in target_cells[1:]:
                    queue.append((target_cells[0], other))
        roots = sorted({find(i) for i in range(len(cells))})
        return [frozenset(members[r]) for r in roots]

    changed = True
    while changed:
        changed = False
        for a in range(len(cells)):
            for b in range(a + 1, len(cells)):
                merged = try_merge(a, b)
                if merged is not None:
                    cells = sorted(merged, key=min)
                    changed = True
                    break
            if changed:
                break
    return ControlCongruence(event, tuple(sorted(cells, key=min)))


def build_quotient(event: int, congruence: ControlCongruence,
                   observer: ObserverAutomaton,
                   tables: ControlTables) -> tuple[Generator, tuple[int, ...]]:
    """Quotient of the observer by the congruence cells, plus the per-cell
    enable map for the event.

    The initial cell is the one holding the initial uncertainty set, the
    marked cells are those holding a marked set, and a cell steps to the
    cell covering all its members' targets.  Overlapping covers loaded from
    files are accepted with a least-index tie-break.
    """
    cells = congruence.cells
    if observer.initial is None:
        raise GeneratorError("observer of an empty supervisor has no quotient")
    initial_candidates = [i for i, c in enumerate(cells) if observer.initial in c]
    if not initial_candidates:
        raise GeneratorError("no cell covers the initial uncertainty set")
    i0 = min(initial_candidates)
    marked = {i for i, c in enumerate(cells) if c & observer.marked}
    transitions = []
    for ci, cell in enumerate(cells):
        for e in sorted(observer.sup.alphabet.observable):
            targets = {observer.step(u, e) for u in cell}
            targets.discard(None)
            if not targets:
                continue
            covering = [j for j, cj in enumerate(cells) if targets <= cj]
            if not covering:
                raise GeneratorError(
                    f"cell {ci} has event-{e} targets split across cells: not a control cover")
            transitions.append((ci, e, min(covering)))
    alphabet = observer.sup.alphabet.restrict(observer.sup.alphabet.observable)
    quotient = Generator(alphabet, len(cells), transitions, i0, marked,
                         name=f"quotient_{event}")
    enable_map = tuple(
        1 if any(tables.enable[event][u] for u in cell) else 0 for cell in cells
    )
    return quotient, enable_map


@dataclass(frozen=True)
class LocalController:
    """Controller enabling/disabling exactly one controllable event.

    Its alphabet is that event plus the observable communication events that
    move the quotient; ``enable_map[y]`` says the event is allowed at state
    y.  For an unobservable event the event occurs only as selfloops at
    enabling states.
    """

    event: int
    generator: Generator
    enable_map: tuple[int, ...]
    comm_events: frozenset[int]
    cells: tuple[frozenset[int], ...] = ()
    removable: bool = False

    @property
    def num_states(self) -> int:
        return self.generator.num_states

    @property
    def alphabet(self) -> Alphabet:
        return self.generator.alphabet

    def violations(self, observable: frozenset[int]) -> list[str]:
        """Structural laws: state changes only on observable events, and an
        unobservable controlled event selfloops exactly at enabling states."""
        problems = []
        g = self.generator
        for src, e, dst in g.transitions():
            if src != dst and e not in observable:
                problems.append(f"non-selfloop transition ({src},{e},{dst}) on unobservable event")
        if self.event not in observable:
            for y in range(g.num_states):
                has_loop = g.step(y, self.event) == y
                moves = g.step(y, self.event) not in (None, y)
                if moves:
                    problems.append(f"controlled event moves state {y}")
                if has_loop != bool(self.enable_map[y]):
                    problems.append(
                        f"controlled-event selfloop at state {y} disagrees with enable map")
        allowed = set(observable) | {self.event}
        extra = set(g.alphabet.ids) - allowed
        if extra:
            problems.append(f"alphabet contains non-observable foreign events {sorted(extra)}")
        return problems


def build_controller(event: int, quotient: Generator, enable_map: Sequence[int],
                     alphabet: Alphabet,
                     cells: tuple[frozenset[int], ...] = (),
                     removable: bool = False) -> LocalController:
    """Restrict the quotient to its moving events and attach the controlled
    event: kept as ordinary transitions when observable, added as selfloops
    at enabling states when not."""
    enable_map = tuple(enable_map)
    comm = set()
    for src, e, dst in quotient.transitions():
        if src != dst and e != event:
            comm.add(e)
    keep = comm | {event}
    observable_event = event in alphabet.observable
    transitions = [
        (s, e, d) for s, e, d in quotient.transitions() if e in keep
    ]
    if not observable_event:
        transitions.extend(
            (y, event, y) for y, on in enumerate(enable_map) if on
        )
    loc_alphabet = Alphabet([alphabet[e] for e in sorted(keep)])
    g = Generator(loc_alphabet, quotient.num_states, transitions,
                  quotient.initial, quotient.marked, name=f"loc_{event}")
    return LocalController(
        event=event,
        generator=g,
        enable_map=enable_map,
        comm_events=frozenset(comm),
        cells=cells,
        removable=removable,
    )


def localize(plant: Generator, sup: Generator) -> dict[int, LocalController]:
    """Full pipeline from a supervisor to one local controller per
    controllable event.

    Requires the supervisor to come from the controllable-and-observable
    synthesis: if some uncertainty set mixes an enabled and a disabled
    member the input was not relatively observable and localization refuses.
    Events that are never disabled still get their (typically one-state)
    controller, flagged removable.
    """
    if sup.is_empty:
        raise GeneratorError("cannot localize an empty supervisor")
    inputs = LocalizationInput.from_supervisor(plant, sup)
    tables = inputs.tables
    bad = tables.violations()
    if bad:
        raise GeneratorError(
            "supervisor is not relatively observable: " + "; ".join(bad))
    controllers: dict[int, LocalController] = {}
    for event in inputs.controllable:
        congruence = compute_congruence(event, inputs)
        quotient, enable_map = build_quotient(event, congruence, inputs.observer, tables)
        removable = not any(tables.disable[event])
        controllers[event] = build_controller(
            event, quotient, enable_map, sup.alphabet,
            cells=congruence.cells, removable=removable)
    return controllers


@dataclass(frozen=True)
class EquivalenceReport:
    ok: bool
    composed_states: int
    sup_states: int
    controller_states: Mapping[int, int]

    def __bool__(self) -> bool:
        return self.ok


def verify_equivalence(plant: Generator, sup: Generator,
                       controllers: Mapping[int, LocalController]) -> EquivalenceReport:
    """The plant constrained by every local controller must reproduce the\
 supervisor's closed and marked behaviors exactly."""
    parts = [plant] + [controllers[e].generator for e in sorted(controllers)]
    composed = sync(parts)
    ok = language_equal(composed, sup)
    return EquivalenceReport(
        ok=ok,
        composed_states=composed.num_states,
        sup_states=sup.num_states,
        controller_states={e: c.num_states for e, c in sorted(controllers.items())},
    )


@dataclass(frozen=True)
class ContractReport:
    ok: bool
    clause: str | None = None  # "structural" or "control"
    witness: tuple[int, ...] | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_controller_contract(controller: LocalController, plant: Generator,
                              sup: Generator) -> ContractReport:
    """A local controller must mirror the supervisor's decisions on its event.

    Structurally, only observable events may move it and an unobservable
    controlled event only selfloops at enabling states.  Behaviorally, along
    every supervisor string the controller admits the event exactly when the
    supervisor continues with it, whenever the plant offers it; checked by a
    product walk of (plant, supervisor, controller).
    """
    event = controller.event
    problems = controller.violations(sup.alphabet.observable)
    if problems:
        return ContractReport(False, "structural", None, "; ".join(problems))
    if sup.is_empty:
        return ContractReport(True)
    loc = controller.generator
    loc_ids = set(loc.alphabet.ids)
    start = (plant.initial, sup.initial, loc.initial)
    parent: dict[tuple, tuple | None] = {start: None}
    queue = deque([start])
    while queue:
        triple = queue.popleft()
        q, x, y = triple
        sup_allows = sup.step(x, event) is not None
        loc_allows = y is not None and loc.step(y, event) is not None
        plant_allows = plant.step(q, event) is not None
        if sup_allows and not loc_allows:
            return ContractReport(False, "control", _witness(triple, parent) + (event,),
                                  "controller blocks an event the supervisor allows")
        if loc_allows and plant_allows and not sup_allows:
            return ContractReport(False, "control", _witness(triple, parent) + (event,),
                                  "controller admits an event the supervisor disables")
        for e, tx in sup.successors(x):
            tq = plant.step(q, e)
            if tq is None:
                return ContractReport(False, "control", _witness(triple, parent) + (e,),
                                      "supervisor leaves the plant")
            ty = y
            if e in loc_ids:
                ty = loc.step(y, e) if y is not None else None
            nxt = (tq, tx, ty)
            if nxt not in parent:
                parent[nxt] = (triple, e)
                queue.append(nxt)
    return ContractReport(True)


def _witness(triple, parent) -> tuple[int, ...]:
    events = []
    while parent[triple] is not None:
        triple, e = parent[triple]
        events.append(e)
    return tuple(reversed(events))
