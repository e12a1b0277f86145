"""Built-in example systems used by the tests, demos, and docs.

Every expected artifact carries a provenance tag: ``published`` values come
from the case study this toolkit reproduces, ``derived:<oracle>`` values
were computed here by the named independent oracle and frozen, and
``definitional`` values follow directly from a definition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .automata import Alphabet, Event, Generator, selfloop, sync


@dataclass(frozen=True)
class Expected:
    value: object
    source: str  # "published" | "derived:<oracle>" | "definitional"


@dataclass(frozen=True)
class Fixture:
    name: str
    generators: Mapping[str, Generator]
    expected: Mapping[str, Expected]


# ---------------------------------------------------------------------------
# Small demonstration bundle: a five-state supervisor whose observer has
# three uncertainty sets, rich enough to exercise every localization step.
# Events 2 and 5 are unobservable; 1, 3, 5 are controllable.
# ---------------------------------------------------------------------------

def demo_alphabet() -> Alphabet:
    return Alphabet([
        Event(1, True, True),
        Event(2, False, False),
        Event(3, True, True),
        Event(4, False, True),
        Event(5, True, False),
        Event(8, False, True),
    ])


def demo_supervisor() -> Generator:
    return Generator(
        demo_alphabet(),
        5,
        [
            (0, 1, 1), (0, 2, 2), (0, 3, 1),
            (1, 2, 2), (1, 4, 3),
            (2, 8, 0),
            (3, 5, 4),
            (4, 8, 1),
        ],
        0,
        [0],
        name="DEMO_SUP",
    )


def demo_plant() -> Generator:
    # The plant extends the supervisor with the continuations the
    # supervisor disables: event 3 after reaching state 1, event 5 after
    # reaching state 2.
    return Generator(
        demo_alphabet(),
        5,
        [
            (0, 1, 1), (0, 2, 2), (0, 3, 1),
            (1, 2, 2), (1, 4, 3), (1, 3, 1),
            (2, 8, 0), (2, 5, 2),
            (3, 5, 4),
            (4, 8, 1),
        ],
        0,
        [0],
        name="DEMO_PLANT",
    )


def demo_bundle() -> Fixture:
    return Fixture(
        name="demo",
        generators={"plant": demo_plant(), "sup": demo_supervisor()},
        expected={
            "uncertainty_sets": Expected([(0, 2), (1, 2), (3, 4)], "published"),
            "observer_transitions": Expected(
                {(0, 1): 1, (0, 3): 1, (0, 8): 0, (1, 4): 2, (1, 8): 0, (2, 8): 1},
                "published"),
            "table_event3": Expected(
                {"E": (1, 0, 0), "D": (0, 1, 0)}, "published"),
            "table_event5": Expected(
                {"E": (0, 0, 1), "D": (1, 1, 0)}, "published"),
            "table_event1": Expected(
                {"E": (1, 0, 0), "D": (0, 0, 0)},
                "derived:control_tables on the reconstructed bundle"),
            "sup_marked_row": Expected((1, 0, 0), "published"),
            "plant_marked_row": Expected((1, 0, 0), "published"),
            "consistent_pairs_event3": Expected(
                {(0, 2): True, (1, 2): True, (0, 1): False}, "published"),
            "consistent_pairs_event5": Expected(
                {(0, 1): True, (0, 2): False, (1, 2): False}, "published"),
            "congruence_event1": Expected(((0, 1, 2),), "published"),
            "congruence_event3": Expected(((0,), (1,), (2,)), "published"),
            "congruence_event5": Expected(((0, 1), (2,)), "published"),
            "controller_sizes": Expected({1: 1, 3: 3, 5: 2}, "published"),
            "controller5_comm_events": Expected((4, 8), "published"),
            "feasible_selfloops": Expected(
                {0: (2,), 1: (2,), 2: (5,)},
                "derived:definition scan of unobservable events per member"),
        },
    )


# ---------------------------------------------------------------------------
# Transfer line: two machines and a test unit linked by two buffers
# (capacities three and one); rejected workpieces loop back to the first
# buffer.  Controllable events: 1, 3, 5.
# ---------------------------------------------------------------------------

def _tl_event(eid: int, unobservable) -> Event:
    return Event(eid, controllable=eid % 2 == 1, observable=eid not in unobservable)


def tl_machine1(unobservable=()) -> Generator:
    alpha = Alphabet([_tl_event(1, unobservable), _tl_event(2, unobservable)])
    return Generator(alpha, 2, [(0, 1, 1), (1, 2, 0)], 0, [0], name="M1")


def tl_machine2(unobservable=()) -> Generator:
    alpha = Alphabet([_tl_event(3, unobservable), _tl_event(4, unobservable)])
    return Generator(alpha, 2, [(0, 3, 1), (1, 4, 0)], 0, [0], name="M2")


def tl_test_unit(unobservable=()) -> Generator:
    alpha = Alphabet([_tl_event(5, unobservable), _tl_event(6, unobservable),
                      _tl_event(8, unobservable)])
    return Generator(alpha, 2, [(0, 5, 1), (1, 6, 0), (1, 8, 0)], 0, [0], name="TU")


def tl_buffer1(unobservable=()) -> Generator:
    # Three slots, filled by events 2 and 8, emptied by event 3.
    alpha = Alphabet([_tl_event(2, unobservable), _tl_event(3, unobservable),
                      _tl_event(8, unobservable)])
    transitions = []
    for level in range(3):
        transitions.append((level, 2, level + 1))
        transitions.append((level, 8, level + 1))
    for level in range(1, 4):
        transitions.append((level, 3, level - 1))
    return Generator(alpha, 4, transitions, 0, [0], name="B1")


def tl_buffer2(unobservable=()) -> Generator:
    alpha = Alphabet([_tl_event(4, unobservable), _tl_event(5, unobservable)])
    return Generator(alpha, 2, [(0, 4, 1), (1, 5, 0)], 0, [0], name="B2")


def tl_plant(unobservable=()) -> Generator:
    return sync([tl_machine1(unobservable), tl_machine2(unobservable),
                 tl_test_unit(unobservable)]).with_name("TL")


def tl_spec(unobservable=()) -> Generator:
    buffers = sync([tl_buffer1(unobservable), tl_buffer2(unobservable)])
    lifted = selfloop(buffers, [_tl_event(1, unobservable), _tl_event(6, unobservable)])
    return lifted.with_name("TLSPEC")


TL_HIDDEN_A = frozenset({3, 6})
TL_HIDDEN_B = frozenset({1, 3, 5})


def transfer_line_fixture(unobservable=frozenset()) -> Fixture:
    unobservable = frozenset(unobservable)
    expected: dict[str, Expected] = {
        "plant_states": Expected(8, "derived:product enumeration (2*2*2, private events)"),
        "controllable": Expected((1, 3, 5), "published"),
    }
    if unobservable == TL_HIDDEN_A:
        expected["sup_states"] = Expected(39, "published")
    elif unobservable == TL_HIDDEN_B:
        expected["sup_states"] = Expected(6, "published")
    return Fixture(
        name=f"transfer_line(hidden={sorted(unobservable)})",
        generators={
            "M1": tl_machine1(unobservable),
            "M2": tl_machine2(unobservable),
            "TU": tl_test_unit(unobservable),
            "B1": tl_buffer1(unobservable),
            "B2": tl_buffer2(unobservable),
            "plant": tl_plant(unobservable),
            "spec": tl_spec(unobservable),
        },
        expected=expected,
    )
