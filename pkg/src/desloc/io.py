"""JSON automaton files, DOT export, and the toolkit's file schemas.

One JSON schema serves plain automata; observers and local controllers add
a few extra keys on top of it.  Identical inputs always serialize to
byte-identical output.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path
from typing import Mapping

from .automata import Alphabet, Event, Generator, default_event, validate


class FormatError(ValueError):
    """Input file violates the expected schema."""

    def __init__(self, source: str, problems: list[str]):
        self.source = source
        self.problems = list(problems)
        details = "; ".join(self.problems)
        super().__init__(f"{source}: {details}")


def generator_to_data(g: Generator) -> dict:
    return {
        "name": g.name,
        "events": [
            {"id": e.id, "controllable": e.controllable, "observable": e.observable}
            for e in g.alphabet
        ],
        "states": g.num_states,
        "initial": g.initial,
        "marked": sorted(g.marked),
        "transitions": [[s, e, d] for s, e, d in g.transitions()],
    }


def generator_from_data(data: Mapping, source: str = "<data>") -> Generator:
    problems = validate(data)
    if problems:
        raise FormatError(source, problems)
    events = []
    defaulted = []
    for entry in data["events"]:
        eid = entry["id"]
        if "controllable" not in entry or "observable" not in entry:
            defaulted.append(eid)
        events.append(default_event(eid, entry.get("controllable"), entry.get("observable")))
    if defaulted:
        warnings.warn(
            f"{source}: events {defaulted} missing flags; "
            "odd-id-controllable / observable defaults applied",
            stacklevel=2,
        )
    return Generator(
        Alphabet(events),
        data["states"],
        [tuple(row) for row in data["transitions"]],
        data["initial"],
        data["marked"],
        data["name"],
    )


def parse_generator(path) -> Generator:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(str(path), [f"invalid JSON: {exc}"]) from exc
    if not isinstance(data, Mapping):
        raise FormatError(str(path), ["top-level value must be an object"])
    return generator_from_data(data, source=str(path))


def write_generator(g: Generator, path) -> None:
    Path(path).write_text(json.dumps(generator_to_data(g), indent=2) + "\n")


def dumps(data) -> str:
    return json.dumps(data, indent=2) + "\n"


def export_dot(obj, path=None) -> str:
    """DOT text for a generator, observer, or local controller.

    The initial state gets an inbound arrow from an invisible node and
    marker states are drawn as double circles.  Node and edge order is
    deterministic.
    """
    from .observer import ObserverAutomaton
    from .localization import LocalController

    if isinstance(obj, ObserverAutomaton):
        g = obj.as_generator()
        labels = {
            i: "{" + ",".join(str(x) for x in u.members) + "}"
            for i, u in enumerate(obj.usets)
        }
    elif isinstance(obj, LocalController):
        g = obj.generator
        labels = {i: f"y{i}" for i in range(g.num_states)}
    else:
        g = obj
        labels = {i: str(i) for i in range(g.num_states)}

    lines = [f'digraph "{g.name or "generator"}" {{', "  rankdir=LR;"]
    if not g.is_empty:
        lines.append('  __init__ [shape=none, label="", width=0, height=0];')
        for q in range(g.num_states):
            shape = "doublecircle" if q in g.marked else "circle"
            lines.append(f'  {q} [shape={shape}, label="{labels[q]}"];')
        lines.append(f"  __init__ -> {g.initial};")
        for src, ev, dst in g.transitions():
            lines.append(f'  {src} -> {dst} [label="{ev}"];')
    lines.append("}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def observer_to_data(observer) -> dict:
    g = observer.as_generator()
    return {
        "name": g.name,
        "events": [
            {"id": e.id, "controllable": e.controllable, "observable": e.observable}
            for e in g.alphabet
        ],
        "usets": [list(u.members) for u in observer.usets],
        "initial": observer.initial,
        "marked": sorted(observer.marked),
        "transitions": [[s, e, d] for s, e, d in g.transitions()],
    }


def tables_to_data(tables, observer) -> dict:
    rows = {}
    for i in range(len(observer.usets)):
        row = {}
        for alpha in tables.events:
            row[f"E_{alpha}"] = tables.enable[alpha][i]
            row[f"D_{alpha}"] = tables.disable[alpha][i]
        row["M"] = tables.sup_marked[i]
        row["T"] = tables.plant_marked[i]
        rows[str(i)] = row
    return {
        "events": list(tables.events),
        "usets": [list(u.members) for u in observer.usets],
        "rows": rows,
    }


def controller_to_data(controller) -> dict:
    data = generator_to_data(controller.generator)
    data["event"] = controller.event
    data["enable"] = list(controller.enable_map)
    data["comm_events"] = sorted(controller.comm_events)
    data["cells"] = [sorted(c) for c in controller.cells]
    data["removable"] = controller.removable
    return data


def controller_from_data(data: Mapping, source: str = "<data>"):
    from .localization import LocalController

    extra = {"event", "enable", "comm_events", "cells", "removable"}
    missing = {"event", "enable"} - set(data)
    if missing:
        raise FormatError(source, [f"missing required field '{k}'" for k in sorted(missing)])
    base = {k: v for k, v in data.items() if k not in extra}
    g = generator_from_data(base, source=source)
    cells = tuple(frozenset(c) for c in data.get("cells", ()))
    return LocalController(
        event=data["event"],
        generator=g,
        enable_map=tuple(data["enable"]),
        comm_events=frozenset(data.get("comm_events", ())),
        cells=cells,
        removable=bool(data.get("removable", False)),
    )


def parse_controller(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(str(path), [f"invalid JSON: {exc}"]) from exc
    return controller_from_data(data, source=str(path))
