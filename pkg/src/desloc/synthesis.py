"""Language synthesis: controllability, relative observability, and the
supremal controllable and relatively observable sublanguage.

The synthesis operates on the trim product of specification and plant and
alternates two pruning passes until stable:

* controllability: drop product states at which the plant can fire an
  uncontrollable event the product cannot follow;
* observability: walk all lookalike string pairs (equal observable
  projections) and remove the transition, or the marking, that makes two
  lookalike strings disagree on a one-step extension or on membership.

The ambient language against which observability is judged stays fixed at
the initial trim product for every round.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .automata import (
    Generator,
    GeneratorError,
    language_subset,
    trim,
)


@dataclass(frozen=True)
class ControllabilityResult:
    ok: bool
    witness: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class ObservabilityResult:
    ok: bool
    pair: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    event: int | None = None
    clause: str | None = None  # "extension" or "marking"

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class SynthesisResult:
    sup: Generator
    iterations: int
    pruned: dict = field(default_factory=dict)


def _require_same_ids(*generators: Generator) -> None:
    ids = {g.alphabet.ids for g in generators}
    if len(ids) > 1:
        raise GeneratorError("alphabet mismatch: " + " vs ".join(str(sorted(i)) for i in ids))


def is_controllable(k: Generator, g: Generator) -> ControllabilityResult:
    """Check that no uncontrollable plant continuation leaves the closure of k.

    Returns the shortest violating string (ties broken by ascending event
    ids); it always ends with the offending uncontrollable event.
    """
    _require_same_ids(k, g)
    k = trim(k)
    if k.is_empty or g.is_empty:
        return ControllabilityResult(True)
    uncontrollable = sorted(g.alphabet.uncontrollable)
    start = (k.initial, g.initial)
    parent: dict[tuple, tuple | None] = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        xk, xg = pair
        if xg is not None:
            for u in uncontrollable:
                if g.step(xg, u) is not None and k.step(xk, u) is None:
                    return ControllabilityResult(False, _path_to(pair, parent) + (u,))
        for e, tk in k.successors(xk):
            nxt = (tk, g.step(xg, e) if xg is not None else None)
            if nxt not in parent:
                parent[nxt] = (pair, e)
                queue.append(nxt)
    return ControllabilityResult(True)


def _path_to(pair, parent) -> tuple[int, ...]:
    events = []
    while parent[pair] is not None:
        pair, e = parent[pair]
        events.append(e)
    return tuple(reversed(events))


def _tagged_product(e: Generator, g: Generator, name: str = ""):
    """Trim joint-stepping product of equal-alphabet generators.

    Returns (product, plant_tags) where plant_tags[i] is the g-component of
    product state i; needed by the controllability pruning.
    """
    if e.is_empty or g.is_empty:
        return Generator.empty(g.alphabet, name), []
    start = (e.initial, g.initial)
    index = {start: 0}
    order = [start]
    queue = deque([start])
    transitions: list[tuple[int, int, int]] = []
    while queue:
        pair = queue.popleft()
        src = index[pair]
        xe, xg = pair
        for ev, te in e.successors(xe):
            tg = g.step(xg, ev)
            if tg is None:
                continue
            nxt = (te, tg)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            transitions.append((src, ev, index[nxt]))
    marked = {i for i, (xe, xg) in enumerate(order)
              if xe in e.marked and xg in g.marked}
    raw = Generator(g.alphabet, len(order), transitions, 0, marked, name)
    tags = [xg for _, xg in order]

    carved = _Carved(raw)
    carved.trim()
    product, keep = carved.renumbered(name)
    return product, [tags[i] for i in keep]


class _Carved:
    """Mutable sub-automaton of a fixed ambient generator (ambient state ids)."""

    def __init__(self, ambient: Generator):
        self.ambient = ambient
        self.alive: set[int] = set(range(ambient.num_states))
        self.trans: dict[tuple[int, int], int] = {
            (s, e): d for s, e, d in ambient.transitions()
        }
        self.marked: set[int] = set(ambient.marked)

    @property
    def is_empty(self) -> bool:
        return self.ambient.initial not in self.alive

    def remove_states(self, states: Iterable[int]) -> None:
        states = set(states)
        self.alive -= states
        self.marked -= states
        self.trans = {
            (s, e): d for (s, e), d in self.trans.items()
            if s not in states and d not in states
        }

    def trim(self) -> None:
        """Restrict to states on an initial-to-marked path (in place)."""
        if self.is_empty:
            self.alive.clear()
            self.marked.clear()
            self.trans.clear()
            return
        pred: dict[int, list[int]] = {}
        succ: dict[int, list[tuple[int, int]]] = {}
        for (s, e), d in self.trans.items():
            pred.setdefault(d, []).append(s)
            succ.setdefault(s, []).append((e, d))
        coreach = set(self.marked)
        queue = deque(coreach)
        while queue:
            q = queue.popleft()
            for p in pred.get(q, ()):
                if p not in coreach and p in self.alive:
                    coreach.add(p)
                    queue.append(p)
        init = self.ambient.initial
        if init not in coreach:
            self.alive.clear()
            self.marked.clear()
            self.trans.clear()
            return
        reach = {init}
        queue = deque([init])
        while queue:
            q = queue.popleft()
            for _, d in succ.get(q, ()):
                if d in coreach and d not in reach:
                    reach.add(d)
                    queue.append(d)
        self.alive = reach
        self.marked &= reach
        self.trans = {
            (s, e): d for (s, e), d in self.trans.items()
            if s in reach and d in reach
        }

    def view(self, name: str = "") -> Generator:
        """Generator over the ambient state space (identity numbering)."""
        if self.is_empty:
            return Generator.empty(self.ambient.alphabet, name)
        return Generator(
            self.ambient.alphabet,
            self.ambient.num_states,
            [(s, e, d) for (s, e), d in self.trans.items()],
            self.ambient.initial,
            self.marked,
            name,
        )

    def renumbered(self, name: str = "") -> tuple[Generator, list[int]]:
        """Canonical BFS-renumbered generator plus the kept ambient state ids."""
        if self.is_empty:
            return Generator.empty(self.ambient.alphabet, name), []
        succ: dict[int, list[tuple[int, int]]] = {}
        for (s, e), d in sorted(self.trans.items()):
            succ.setdefault(s, []).append((e, d))
        init = self.ambient.initial
        order = [init]
        seen = {init}
        queue = deque(order)
        while queue:
            q = queue.popleft()
            for _, d in succ.get(q, ()):
                if d not in seen:
                    seen.add(d)
                    order.append(d)
                    queue.append(d)
        index = {old: new for new, old in enumerate(order)}
        transitions = [
            (index[s], e, index[d]) for (s, e), d in self.trans.items()
            if s in index and d in index
        ]
        marked = [index[q] for q in self.marked if q in index]
        return Generator(self.ambient.alphabet, len(order), transitions, 0,
                         marked, name), order


def _prune_uncontrollable(carved: _Carved, plant_tags: list[int], g: Generator) -> int:
    """Remove product states with an uncontrollable plant continuation the
    product cannot follow; re-trim until stable.  Returns states removed."""
    uncontrollable = sorted(g.alphabet.uncontrollable)
    removed = 0
    while not carved.is_empty:
        bad = [
            q for q in carved.alive
            if any(
                g.step(plant_tags[q], u) is not None and (q, u) not in carved.trans
                for u in uncontrollable
            )
        ]
        if not bad:
            break
        removed += len(bad)
        carved.remove_states(bad)
        carved.trim()
    return removed


def supcon(g: Generator, e: Generator) -> Generator:
    """Supremal controllable sublanguage of L_m(e) ∩ L_m(g), as a trim generator."""
    _require_same_ids(g, e)
    product, tags = _tagged_product(e, g, name=f"supcon({g.name},{e.name})")
    carved = _Carved(product)
    _prune_uncontrollable(carved, tags, g)
    result, _ = carved.renumbered(f"supcon({g.name},{e.name})")
    return result


_BOT = -1


def _scan_lookalike_pairs(k: Generator, c: Generator, g: Generator,
                          sigma_o: frozenset[int], stop_at_first: bool):
    """BFS over pairs of lookalike strings in the closure of c's behavior.

    Each side is tracked as (k-state or -1 once outside k's closure, c-state,
    g-state); sides advance jointly on observable events and interleave on
    unobservable ones.  Yields relative-observability violations:

    * extension: s·e inside k's closure while a lookalike s' allows e in g
      but not in k;
    * marking: s marked in k while a lookalike s' is marked in g but not in k.

    Returns either the first violation (clause, s, s', event) or the full
    (transition removals, unmarkings) needed by the synthesis sweep.
    """
    removals: set[tuple[int, int]] = set()
    unmarkings: set[int] = set()
    if c.is_empty or g.is_empty:
        return None if stop_at_first else (removals, unmarkings)
    ids = c.alphabet.ids
    k0 = k.initial if not k.is_empty else _BOT
    start = ((k0, c.initial, g.initial), (k0, c.initial, g.initial))
    parent: dict[tuple, tuple | None] = {start: None}
    queue = deque([start])

    def advance(triple, e):
        xk, xc, xg = triple
        tc = c.step(xc, e)
        if tc is None:
            return None
        tg = g.step(xg, e)
        if tg is None:
            return None
        tk = k.step(xk, e) if xk != _BOT else None
        return (_BOT if tk is None else tk, tc, tg)

    while queue:
        pair = queue.popleft()
        left, right = pair
        for flipped, (a, b) in enumerate(((left, right), (right, left))):
            ak, _, _ = a
            bk, _, bg = b
            if ak == _BOT:
                continue
            for e in ids:
                if (k.step(ak, e) is not None and g.step(bg, e) is not None
                        and (bk == _BOT or k.step(bk, e) is None)):
                    if stop_at_first:
                        s, s_prime = _pair_strings(pair, parent)
                        if flipped:
                            s, s_prime = s_prime, s
                        return "extension", s, s_prime, e
                    removals.add((ak, e))
            if (ak in k.marked and bg in g.marked
                    and (bk == _BOT or bk not in k.marked)):
                if stop_at_first:
                    s, s_prime = _pair_strings(pair, parent)
                    if flipped:
                        s, s_prime = s_prime, s
                    return "marking", s, s_prime, None
                unmarkings.add(ak)
        for e in ids:
            if e in sigma_o:
                nl = advance(left, e)
                nr = advance(right, e)
                if nl is not None and nr is not None:
                    nxt = (nl, nr)
                    if nxt not in parent:
                        parent[nxt] = (pair, "both", e)
                        queue.append(nxt)
            else:
                nl = advance(left, e)
                if nl is not None:
                    nxt = (nl, right)
                    if nxt not in parent:
                        parent[nxt] = (pair, "left", e)
                        queue.append(nxt)
                nr = advance(right, e)
                if nr is not None:
                    nxt = (left, nr)
                    if nxt not in parent:
                        parent[nxt] = (pair, "right", e)
                        queue.append(nxt)
    return None if stop_at_first else (removals, unmarkings)


def _pair_strings(pair, parent) -> tuple[tuple[int, ...], tuple[int, ...]]:
    left: list[int] = []
    right: list[int] = []
    while parent[pair] is not None:
        pair, side, e = parent[pair]
        if side != "right":
            left.append(e)
        if side != "left":
            right.append(e)
    return tuple(reversed(left)), tuple(reversed(right))


def is_relatively_observable(k: Generator, c: Generator, g: Generator,
                             sigma_o: Iterable[int] | None = None) -> ObservabilityResult:
    """Check relative observability of k within ambient c, against plant g.

    Lookalike strings (equal projections onto the observable events) must
    agree on one-step extensions inside k's closure and on marked-language
    membership.  Requires marked-language containment k ⊆ c ⊆ g.
    """
    _require_same_ids(k, c, g)
    sigma_o = frozenset(sigma_o) if sigma_o is not None else g.alphabet.observable
    if not language_subset(k, c)[1]:
        raise GeneratorError("containment precondition violated: k not within c")
    if not language_subset(c, g)[1]:
        raise GeneratorError("containment precondition violated: c not within g")
    hit = _scan_lookalike_pairs(trim(k), trim(c), g, sigma_o, stop_at_first=True)
    if hit is None:
        return ObservabilityResult(True)
    clause, s, s_prime, event = hit
    return ObservabilityResult(False, (s, s_prime), event, clause)


def sup_co(g: Generator, e: Generator) -> SynthesisResult:
    """Supremal controllable and relatively observable sublanguage of
    L_m(e) ∩ L_m(g), realized on the trim product of e and g.

    The ambient language for observability is frozen at that initial trim
    product.  Each round prunes uncontrollable states, then removes the
    transitions and markings flagged by the lookalike-pair scan, then trims;
    rounds repeat until nothing changes.  Observability is read from the
    event flags.
    """
    _require_same_ids(g, e)
    sigma_o = g.alphabet.observable
    name = f"supco({g.name},{e.name})"
    ambient, tags = _tagged_product(e, g, name=name)
    carved = _Carved(ambient)
    pruned = {"controllability": 0, "observability_transitions": 0,
              "observability_markings": 0}
    iterations = 0
    while True:
        iterations += 1
        removed = _prune_uncontrollable(carved, tags, g)
        pruned["controllability"] += removed
        if carved.is_empty:
            break
        removals, unmarkings = _scan_lookalike_pairs(
            carved.view(), ambient, g, sigma_o, stop_at_first=False)
        removals = {(q, ev) for (q, ev) in removals if (q, ev) in carved.trans}
        unmarkings = {q for q in unmarkings if q in carved.marked}
        if not removals and not unmarkings and removed == 0:
            break
        pruned["observability_transitions"] += len(removals)
        pruned["observability_markings"] += len(unmarkings)
        for key in removals:
            del carved.trans[key]
        carved.marked -= unmarkings
        carved.trim()
        if carved.is_empty:
            break
    sup, _ = carved.renumbered(name)
    if sup.is_empty:
        warnings.warn(f"{name}: supremal controllable and observable sublanguage is empty",
                      stacklevel=2)
    return SynthesisResult(sup=sup, iterations=iterations, pruned=pruned)
