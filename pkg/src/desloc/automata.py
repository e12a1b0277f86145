"""Deterministic generators (partial-transition automata) and language operations.

States are dense integer indices.  The generator with no states is a valid
value and every operation is total on it.  Operations are pure: they return
new generators and never mutate their inputs, so values can be shared freely
between concurrent callers.

State numbering is deterministic: products and subset constructions number
states in BFS discovery order, expanding events in ascending id order, so
identical inputs always produce identical outputs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence


class GeneratorError(ValueError):
    """Generator data violates a structural invariant."""


@dataclass(frozen=True)
class Event:
    """Event with an integer id and control/observation attributes."""

    id: int
    controllable: bool
    observable: bool

    def __post_init__(self) -> None:
        if self.id < 0:
            raise GeneratorError(f"event id {self.id} must be nonnegative")


def default_event(event_id: int, controllable=None, observable=None) -> Event:
    """Event with TCT-style defaults: odd ids controllable, everything observable."""
    if controllable is None:
        controllable = event_id % 2 == 1
    if observable is None:
        observable = True
    return Event(event_id, bool(controllable), bool(observable))


class Alphabet:
    """Ordered set of events, unique ids, kept in ascending id order."""

    def __init__(self, events: Iterable[Event]):
        ordered = sorted(events, key=lambda e: e.id)
        by_id: dict[int, Event] = {}
        for ev in ordered:
            if ev.id in by_id:
                raise GeneratorError(f"duplicate event id {ev.id}")
            by_id[ev.id] = ev
        self._events = tuple(ordered)
        self._by_id = by_id

    def __iter__(self) -> Iterator[Event]:
        return iter(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def __contains__(self, event_id: int) -> bool:
        return event_id in self._by_id

    def __getitem__(self, event_id: int) -> Event:
        return self._by_id[event_id]

    def __eq__(self, other) -> bool:
        return isinstance(other, Alphabet) and self._events == other._events

    def __hash__(self) -> int:
        return hash(self._events)

    def __repr__(self) -> str:
        return f"Alphabet({list(self._events)!r})"

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(e.id for e in self._events)

    @property
    def controllable(self) -> frozenset[int]:
        return frozenset(e.id for e in self._events if e.controllable)

    @property
    def uncontrollable(self) -> frozenset[int]:
        return frozenset(e.id for e in self._events if not e.controllable)

    @property
    def observable(self) -> frozenset[int]:
        return frozenset(e.id for e in self._events if e.observable)

    @property
    def unobservable(self) -> frozenset[int]:
        return frozenset(e.id for e in self._events if not e.observable)

    def restrict(self, keep: Iterable[int]) -> "Alphabet":
        keep = frozenset(keep)
        missing = keep - set(self.ids)
        if missing:
            raise GeneratorError(f"events {sorted(missing)} not in alphabet")
        return Alphabet(e for e in self._events if e.id in keep)

    def with_flags(self, controllable=None, observable=None) -> "Alphabet":
        """New alphabet with the controllable/observable sets replaced wholesale."""
        events = []
        for e in self._events:
            c = e.controllable if controllable is None else (e.id in controllable)
            o = e.observable if observable is None else (e.id in observable)
            events.append(Event(e.id, c, o))
        return Alphabet(events)

    @staticmethod
    def merge(alphabets: Iterable["Alphabet"]) -> "Alphabet":
        """Union of alphabets; shared ids must carry identical flags."""
        by_id: dict[int, Event] = {}
        for alpha in alphabets:
            for ev in alpha:
                seen = by_id.get(ev.id)
                if seen is None:
                    by_id[ev.id] = ev
                elif seen != ev:
                    raise GeneratorError(
                        f"conflicting flags for shared event {ev.id}: {seen} vs {ev}"
                    )
        return Alphabet(by_id.values())


class Generator:
    """Deterministic generator: (states, alphabet, partial transitions, initial, marked).

    The closed behavior is the set of defined paths from the initial state;
    the marked behavior is the subset of paths ending in a marked state.
    """

    __slots__ = ("name", "alphabet", "num_states", "initial", "marked", "_trans", "_succ")

    def __init__(
        self,
        alphabet: Alphabet,
        num_states: int,
        transitions: Iterable[tuple[int, int, int]] = (),
        initial: int | None = 0,
        marked: Iterable[int] = (),
        name: str = "",
    ):
        if num_states < 0:
            raise GeneratorError("state count must be nonnegative")
        if num_states == 0:
            initial = None
        elif initial is None:
            raise GeneratorError("nonempty generator needs an initial state")
        elif not 0 <= initial < num_states:
            raise GeneratorError(f"initial state {initial} out of range")
        marked = frozenset(marked)
        for m in marked:
            if not 0 <= m < num_states:
                raise GeneratorError(f"marked state {m} out of range")
        trans: dict[tuple[int, int], int] = {}
        for src, ev, dst in transitions:
            if not 0 <= src < num_states:
                raise GeneratorError(f"dangling source {src} in transition ({src}, {ev}, {dst})")
            if not 0 <= dst < num_states:
                raise GeneratorError(f"dangling target {dst} in transition ({src}, {ev}, {dst})")
            if ev not in alphabet:
                raise GeneratorError(f"transition event {ev} not in alphabet")
            if (src, ev) in trans:
                raise GeneratorError(f"nondeterministic at ({src}, {ev})")
            trans[(src, ev)] = dst
        self.name = name
        self.alphabet = alphabet
        self.num_states = num_states
        self.initial = initial
        self.marked = marked
        self._trans = trans
        succ: dict[int, list[tuple[int, int]]] = {}
        for (src, ev), dst in trans.items():
            succ.setdefault(src, []).append((ev, dst))
        for lst in succ.values():
            lst.sort()
        self._succ = succ

    @staticmethod
    def empty(alphabet: Alphabet, name: str = "") -> "Generator":
        return Generator(alphabet, 0, (), None, (), name)

    @property
    def is_empty(self) -> bool:
        return self.num_states == 0

    def step(self, state: int, event_id: int) -> int | None:
        return self._trans.get((state, event_id))

    def step_string(self, state: int, string: Sequence[int]) -> int | None:
        for e in string:
            state = self._trans.get((state, e))
            if state is None:
                return None
        return state

    def events_at(self, state: int) -> tuple[int, ...]:
        return tuple(e for e, _ in self._succ.get(state, ()))

    def successors(self, state: int) -> tuple[tuple[int, int], ...]:
        return tuple(self._succ.get(state, ()))

    def transitions(self) -> Iterator[tuple[int, int, int]]:
        for (src, ev), dst in sorted(self._trans.items()):
            yield src, ev, dst

    @property
    def num_transitions(self) -> int:
        return len(self._trans)

    def accepts(self, string: Sequence[int]) -> bool:
        """Membership of a string in the marked behavior."""
        if self.initial is None:
            return False
        q = self.step_string(self.initial, string)
        return q is not None and q in self.marked

    def generates(self, string: Sequence[int]) -> bool:
        """Membership of a string in the closed behavior."""
        if self.initial is None:
            return False
        return self.step_string(self.initial, string) is not None

    def with_name(self, name: str) -> "Generator":
        return Generator(self.alphabet, self.num_states, self.transitions(),
                         self.initial, self.marked, name)

    def with_flags(self, controllable=None, observable=None) -> "Generator":
        alpha = self.alphabet.with_flags(controllable, observable)
        return Generator(alpha, self.num_states, self.transitions(),
                         self.initial, self.marked, self.name)

    def languages(self) -> "LanguagePair":
        return LanguagePair(closed=self, marked=self)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Generator)
            and self.alphabet == other.alphabet
            and self.num_states == other.num_states
            and self.initial == other.initial
            and self.marked == other.marked
            and self._trans == other._trans
        )

    def __hash__(self) -> int:
        return hash((self.alphabet, self.num_states, self.initial, self.marked,
                     tuple(sorted(self._trans.items()))))

    def __repr__(self) -> str:
        label = self.name or "generator"
        return (f"<{label}: {self.num_states} states, {len(self._trans)} transitions, "
                f"{len(self.marked)} marked>")


@dataclass(frozen=True)
class LanguagePair:
    """Closed/marked behavior of one recognizer (both realized by the same generator)."""

    closed: Generator
    marked: Generator


def validate(g) -> list[str]:
    """List of invariant violations; empty means the generator is well formed.

    Accepts either a Generator or a raw mapping in the JSON automaton layout,
    so duplicate transition rows in input files are reported before they
    collapse into the deterministic transition map.
    """
    if isinstance(g, Generator):
        return _validate_generator(g)
    if isinstance(g, Mapping):
        return _validate_data(g)
    return [f"unsupported input of type {type(g).__name__}"]


def _validate_generator(g: Generator) -> list[str]:
    problems = []
    if g.num_states == 0:
        if g.initial is not None:
            problems.append("empty generator with an initial state")
        if g.marked:
            problems.append("empty generator with marked states")
        return problems
    if g.initial is None or not 0 <= g.initial < g.num_states:
        problems.append(f"initial state {g.initial} out of range")
    for m in sorted(g.marked):
        if not 0 <= m < g.num_states:
            problems.append(f"marked state {m} out of range")
    for src, ev, dst in g.transitions():
        if ev not in g.alphabet:
            problems.append(f"transition event {ev} not in alphabet")
        if not 0 <= src < g.num_states:
            problems.append(f"dangling source {src} in transition ({src}, {ev}, {dst})")
        if not 0 <= dst < g.num_states:
            problems.append(f"dangling target {dst} in transition ({src}, {ev}, {dst})")
    return problems


_REQUIRED_KEYS = ("name", "events", "states", "initial", "marked", "transitions")


def _validate_data(data: Mapping) -> list[str]:
    problems = []
    for key in _REQUIRED_KEYS:
        if key not in data:
            problems.append(f"missing required field '{key}'")
    if problems:
        return problems
    if not isinstance(data["name"], str):
        problems.append("'name' must be a string")
    if not isinstance(data["states"], int) or isinstance(data["states"], bool):
        problems.append("'states' must be an integer")
        return problems
    num_states = data["states"]
    if num_states < 0:
        problems.append("'states' must be nonnegative")

    ids: set[int] = set()
    if not isinstance(data["events"], list):
        problems.append("'events' must be a list")
    else:
        for i, entry in enumerate(data["events"]):
            if not isinstance(entry, Mapping) or "id" not in entry:
                problems.append(f"event #{i} must be an object with an 'id'")
                continue
            eid = entry["id"]
            if not isinstance(eid, int) or isinstance(eid, bool) or eid < 0:
                problems.append(f"event #{i} id must be a nonnegative integer")
                continue
            if eid in ids:
                problems.append(f"duplicate event id {eid}")
            ids.add(eid)
            for flag in ("controllable", "observable"):
                if flag in entry and not isinstance(entry[flag], bool):
                    problems.append(f"event {eid}: '{flag}' must be a boolean")

    initial = data["initial"]
    if num_states == 0:
        if initial is not None:
            problems.append("'initial' must be null for a generator with no states")
    elif not isinstance(initial, int) or isinstance(initial, bool) or not 0 <= initial < num_states:
        problems.append(f"initial state {initial} out of range")

    if not isinstance(data["marked"], list):
        problems.append("'marked' must be a list")
    else:
        for m in data["marked"]:
            if not isinstance(m, int) or isinstance(m, bool) or not 0 <= m < num_states:
                problems.append(f"marked state {m} out of range")

    if not isinstance(data["transitions"], list):
        problems.append("'transitions' must be a list")
        return problems
    seen: dict[tuple[int, int], int] = {}
    for i, row in enumerate(data["transitions"]):
        if (not isinstance(row, list) or len(row) != 3
                or any(not isinstance(x, int) or isinstance(x, bool) for x in row)):
            problems.append(f"transition #{i} must be [src, eventId, dst]")
            continue
        src, ev, dst = row
        if not 0 <= src < num_states:
            problems.append(f"dangling source {src} in transition {row}")
        if not 0 <= dst < num_states:
            problems.append(f"dangling target {dst} in transition {row}")
        if ids and ev not in ids:
            problems.append(f"transition event {ev} not in alphabet")
        if (src, ev) in seen:
            problems.append(f"nondeterministic at ({src}, {ev})")
        seen[(src, ev)] = dst
    return problems


def _bfs_order(g: Generator, allowed: frozenset[int] | None = None) -> list[int]:
    """States reachable from the initial state, in BFS order with ascending events."""
    if g.initial is None or (allowed is not None and g.initial not in allowed):
        return []
    order = [g.initial]
    seen = {g.initial}
    queue = deque(order)
    while queue:
        q = queue.popleft()
        for ev, dst in g.successors(q):
            if allowed is not None and dst not in allowed:
                continue
            if dst not in seen:
                seen.add(dst)
                order.append(dst)
                queue.append(dst)
    return order


def _restrict(g: Generator, order: list[int], name: str | None = None) -> Generator:
    """Sub-generator on the given states, renumbered by their position in `order`."""
    if not order:
        return Generator.empty(g.alphabet, name if name is not None else g.name)
    index = {old: new for new, old in enumerate(order)}
    transitions = [
        (index[src], ev, index[dst])
        for src, ev, dst in g.transitions()
        if src in index and dst in index
    ]
    marked = [index[m] for m in g.marked if m in index]
    return Generator(g.alphabet, len(order), transitions, index[g.initial],
                     marked, name if name is not None else g.name)


def reachable(g: Generator) -> Generator:
    """Sub-generator on the states reachable from the initial state."""
    return _restrict(g, _bfs_order(g))


def _coreachable_states(g: Generator) -> set[int]:
    pred: dict[int, list[int]] = {}
    for src, _, dst in g.transitions():
        pred.setdefault(dst, []).append(src)
    alive = set(g.marked)
    queue = deque(alive)
    while queue:
        q = queue.popleft()
        for p in pred.get(q, ()):
            if p not in alive:
                alive.add(p)
                queue.append(p)
    return alive


def coreachable(g: Generator) -> Generator:
    """Sub-generator on the states from which a marked state is reachable."""
    alive = frozenset(_coreachable_states(g))
    if g.initial is None or g.initial not in alive:
        return Generator.empty(g.alphabet, g.name)
    order = _bfs_order(g, alive)
    extra = sorted(alive - set(order))
    return _restrict(g, order + extra)


def trim(g: Generator) -> Generator:
    """Reachable and coreachable part; recognizes the same marked behavior."""
    alive = frozenset(_coreachable_states(g))
    return _restrict(g, _bfs_order(g, alive))


def is_nonblocking(g: Generator) -> bool:
    """True iff every reachable state can reach a marked state (vacuously on empty)."""
    if g.is_empty:
        return True
    alive = _coreachable_states(g)
    return all(q in alive for q in _bfs_order(g))


def sync(generators: Sequence[Generator]) -> Generator:
    """Synchronous product: handshake on shared events, shuffle on private ones.

    Shared event ids must carry identical flags.  The result contains only
    reachable states, numbered in BFS discovery order.
    """
    if not generators:
        raise GeneratorError("sync of zero generators")
    alphabet = Alphabet.merge(g.alphabet for g in generators)
    name = "||".join(g.name or f"g{i}" for i, g in enumerate(generators))
    if any(g.is_empty for g in generators):
        return Generator.empty(alphabet, name)
    movers: dict[int, tuple[int, ...]] = {
        e: tuple(i for i, g in enumerate(generators) if e in g.alphabet)
        for e in alphabet.ids
    }
    start = tuple(g.initial for g in generators)
    index = {start: 0}
    order = [start]
    queue = deque([start])
    transitions = []
    while queue:
        tup = queue.popleft()
        src = index[tup]
        for e in alphabet.ids:
            nxt = list(tup)
            ok = True
            for i in movers[e]:
                t = generators[i].step(tup[i], e)
                if t is None:
                    ok = False
                    break
                nxt[i] = t
            if not ok:
                continue
            nxt = tuple(nxt)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            transitions.append((src, e, index[nxt]))
    marked = [
        i for i, tup in enumerate(order)
        if all(q in g.marked for q, g in zip(tup, generators))
    ]
    return Generator(alphabet, len(order), transitions, 0, marked, name)


def _unobservable_reach(g: Generator, mask: int, erased: frozenset[int]) -> int:
    """Closure of a state bitset under transitions labeled by erased events."""
    stack = [q for q in range(g.num_states) if mask >> q & 1]
    while stack:
        q = stack.pop()
        for e, dst in g.successors(q):
            if e in erased and not mask >> dst & 1:
                mask |= 1 << dst
                stack.append(dst)
    return mask


def determinize(g: Generator, keep: Iterable[int]):
    """Subset construction after erasing events outside `keep`.

    Returns (masks, initial_index, marked_indices, transitions) where masks
    are state bitsets in BFS discovery order.  A subset is marked iff it
    contains a marked state of g.
    """
    keep = frozenset(keep)
    missing = keep - set(g.alphabet.ids)
    if missing:
        raise GeneratorError(f"events {sorted(missing)} not in alphabet")
    if g.is_empty:
        return [], None, frozenset(), {}
    erased = frozenset(g.alphabet.ids) - keep
    kept_sorted = sorted(keep)
    start = _unobservable_reach(g, 1 << g.initial, erased)
    masks = [start]
    index = {start: 0}
    transitions: dict[tuple[int, int], int] = {}
    queue = deque([start])
    while queue:
        mask = queue.popleft()
        src = index[mask]
        members = [q for q in range(g.num_states) if mask >> q & 1]
        for e in kept_sorted:
            nxt = 0
            for q in members:
                t = g.step(q, e)
                if t is not None:
                    nxt |= 1 << t
            if nxt == 0:
                continue
            nxt = _unobservable_reach(g, nxt, erased)
            if nxt not in index:
                index[nxt] = len(masks)
                masks.append(nxt)
                queue.append(nxt)
            transitions[(src, e)] = index[nxt]
    marked_mask = 0
    for m in g.marked:
        marked_mask |= 1 << m
    marked = frozenset(i for i, mask in enumerate(masks) if mask & marked_mask)
    return masks, 0, marked, transitions


def project(g: Generator, keep: Iterable[int]) -> Generator:
    """Natural projection onto the `keep` events, returned as a minimal generator."""
    keep = frozenset(keep)
    alphabet = g.alphabet.restrict(keep)
    masks, initial, marked, transitions = determinize(g, keep)
    if initial is None:
        return Generator.empty(alphabet, g.name)
    raw = Generator(alphabet, len(masks),
                    [(s, e, d) for (s, e), d in transitions.items()],
                    initial, marked, g.name)
    return minimize(raw)


def selfloop(g: Generator, events: Iterable[Event | int], at=None) -> Generator:
    """Add a selfloop for each listed event at every state (or where `at` holds).

    Events already in the alphabet must occur only as selfloops; ids not in
    the alphabet must be passed as Event values so their flags are known.
    """
    new_events: list[Event] = []
    ids: list[int] = []
    for ev in events:
        if isinstance(ev, Event):
            if ev.id in g.alphabet and g.alphabet[ev.id] != ev:
                raise GeneratorError(f"conflicting flags for event {ev.id}")
            if ev.id not in g.alphabet:
                new_events.append(ev)
            ids.append(ev.id)
        else:
            if ev not in g.alphabet:
                raise GeneratorError(f"event {ev} not in alphabet; pass an Event with flags")
            ids.append(ev)
    for e in ids:
        if e in g.alphabet:
            for src, ev, dst in g.transitions():
                if ev == e and src != dst:
                    raise GeneratorError(f"event {e} has a non-selfloop transition at {src}")
    alphabet = Alphabet.merge([g.alphabet, Alphabet(new_events)])
    if callable(at):
        targets = [q for q in range(g.num_states) if at(q)]
    elif at is None:
        targets = list(range(g.num_states))
    else:
        targets = sorted(set(at))
    transitions = dict(((s, e), d) for s, e, d in g.transitions())
    for q in targets:
        for e in ids:
            transitions.setdefault((q, e), q)
    return Generator(alphabet, g.num_states,
                     [(s, e, d) for (s, e), d in transitions.items()],
                     g.initial, g.marked, g.name)


def minimize(g: Generator) -> Generator:
    """Canonical minimal recognizer of the (closed, marked) behavior pair.

    Completes the transition function with a dump state, refines the Nerode
    partition jointly on marking and liveness, then removes the dump class.
    """
    g = reachable(g)
    if g.is_empty:
        return g
    n = g.num_states
    dump = n
    ids = g.alphabet.ids

    def dst(q: int, e: int) -> int:
        if q == dump:
            return dump
        t = g.step(q, e)
        return dump if t is None else t

    block = [0 if q in g.marked else 1 for q in range(n)] + [2]
    while True:
        signatures: dict[tuple, int] = {}
        new_block = [0] * (n + 1)
        for q in range(n + 1):
            sig = (block[q], tuple(block[dst(q, e)] for e in ids))
            new_block[q] = signatures.setdefault(sig, len(signatures))
        if new_block == block:
            break
        block = new_block

    dump_block = block[dump]
    representatives: dict[int, int] = {}
    for q in range(n):
        representatives.setdefault(block[q], q)
    transitions = []
    for b, q in representatives.items():
        if b == dump_block:
            continue
        for e, t in g.successors(q):
            if block[t] != dump_block:
                transitions.append((b, e, block[t]))
    live_blocks = sorted(b for b in representatives if b != dump_block)
    remap = {b: i for i, b in enumerate(live_blocks)}
    quotient = Generator(
        g.alphabet, len(live_blocks),
        [(remap[s], e, remap[d]) for s, e, d in transitions],
        remap[block[g.initial]],
        {remap[block[q]] for q in g.marked},
        g.name,
    )
    return _restrict(quotient, _bfs_order(quotient))


def language_equal(g1: Generator, g2: Generator) -> bool:
    """True iff both the closed and the marked behaviors coincide.

    Decided as a bisimulation walk over the completed transition structures,
    which is equivalent to comparing canonical minimized forms.
    """
    if g1.is_empty or g2.is_empty:
        return g1.is_empty and g2.is_empty
    ids = sorted(set(g1.alphabet.ids) | set(g2.alphabet.ids))
    start = (g1.initial, g2.initial)
    seen = {start}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        if (x in g1.marked) != (y in g2.marked):
            return False
        for e in ids:
            tx = g1.step(x, e)
            ty = g2.step(y, e)
            if (tx is None) != (ty is None):
                return False
            if tx is None:
                continue
            pair = (tx, ty)
            if pair not in seen:
                seen.add(pair)
                queue.append(pair)
    return True


def language_subset(g1: Generator, g2: Generator) -> tuple[bool, bool]:
    """(closed, marked) inclusion of g1's behaviors in g2's, via a product walk."""
    if g1.is_empty:
        return True, True
    closed_ok = True
    marked_ok = True
    start = (g1.initial, g2.initial if not g2.is_empty else None)
    seen = {start}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        if y is None:
            closed_ok = False
        if x in g1.marked and (y is None or y not in g2.marked):
            marked_ok = False
        if not closed_ok and not marked_ok:
            return False, False
        for e, tx in g1.successors(x):
            ty = g2.step(y, e) if y is not None else None
            pair = (tx, ty)
            if pair not in seen:
                seen.add(pair)
                queue.append(pair)
    return closed_ok, marked_ok


def isomorphic(g1: Generator, g2: Generator) -> bool:
    """Transition-preserving bijection of the given (unminimized) generators.

    Demands identical alphabets and state counts; the bijection is forced by
    a lockstep BFS and must cover every state, so generators are expected to
    be reachable.
    """
    if g1.alphabet != g2.alphabet or g1.num_states != g2.num_states:
        return False
    if g1.is_empty:
        return True
    phi = {g1.initial: g2.initial}
    queue = deque([(g1.initial, g2.initial)])
    while queue:
        x, y = queue.popleft()
        if (x in g1.marked) != (y in g2.marked):
            return False
        ex = g1.events_at(x)
        if ex != g2.events_at(y):
            return False
        for e in ex:
            tx = g1.step(x, e)
            ty = g2.step(y, e)
            if tx in phi:
                if phi[tx] != ty:
                    return False
            else:
                phi[tx] = ty
                queue.append((tx, ty))
    if len(phi) != g1.num_states or len(set(phi.values())) != g2.num_states:
        return False
    return True
