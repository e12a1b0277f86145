"""Scale-up pipeline: per-specification decentralized supervisors,
config-driven subsystem grouping, coordinators for blocking groups,
natural-observer abstraction between levels, and final localization of
every supervisor and coordinator against its own plant scope.
"""

from __future__ import annotations

import json
import warnings
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .automata import (
    Generator,
    GeneratorError,
    determinize,
    is_nonblocking,
    project,
    selfloop,
    sync,
    trim,
)
from .io import generator_from_data, parse_generator
from .localization import EquivalenceReport, LocalController, localize, verify_equivalence
from .synthesis import sup_co


class PipelineError(RuntimeError):
    """Pipeline stage failure, labeled with the stage and unit it came from."""


@dataclass(frozen=True)
class SpecEntry:
    generator: Generator
    agents: tuple[str, ...]


@dataclass(frozen=True)
class PipelineConfig:
    """Named agents and specifications, plus the per-level grouping of the
    surviving modules.  Later levels refer to the generated subsystem names
    ``sub<level>_<index>``.  Abstraction alphabets are optional; when absent
    the events shared between at least two surviving models are used."""

    agents: Mapping[str, Generator]
    specs: Mapping[str, SpecEntry]
    groups: tuple[tuple[tuple[str, ...], ...], ...] = ()
    abstraction_alphabets: tuple[frozenset[int] | None, ...] = ()

    @staticmethod
    def from_data(data: Mapping, base_dir: Path | None = None) -> "PipelineConfig":
        base = Path(base_dir) if base_dir is not None else Path(".")

        def load(value, label):
            if isinstance(value, str):
                return parse_generator(base / value)
            if isinstance(value, Mapping):
                return generator_from_data(value, source=label)
            raise PipelineError(f"{label}: generator must be a file path or an object")

        agents = {
            name: load(value, f"agent {name}").with_name(name)
            for name, value in data.get("agents", {}).items()
        }
        specs = {}
        for name, entry in data.get("specs", {}).items():
            gen = load(entry.get("generator"), f"spec {name}").with_name(name)
            names = tuple(entry.get("agents", ()))
            for a in names:
                if a not in agents:
                    raise PipelineError(f"spec {name}: unknown agent '{a}'")
            specs[name] = SpecEntry(gen, names)
        groups = tuple(
            tuple(tuple(group) for group in level) for level in data.get("groups", ())
        )
        abstraction = tuple(
            frozenset(level) if level is not None else None
            for level in data.get("abstraction_alphabets", ())
        )
        return PipelineConfig(agents, specs, groups, abstraction)


def load_pipeline_config(path) -> PipelineConfig:
    path = Path(path)
    data = json.loads(path.read_text())
    return PipelineConfig.from_data(data, base_dir=path.parent)


def _lift(plant: Generator, spec: Generator, label: str) -> tuple[Generator, Generator]:
    """Put plant and specification over the merged alphabet by selflooping
    each with the other's private events."""
    plant_ids = set(plant.alphabet.ids)
    spec_ids = set(spec.alphabet.ids)
    if plant_ids and spec_ids and not plant_ids & spec_ids:
        warnings.warn(f"{label}: specification alphabet is disjoint from its agents",
                      stacklevel=3)
    plant_l = plant
    extra = sorted(spec_ids - plant_ids)
    if extra:
        plant_l = selfloop(plant, [spec.alphabet[e] for e in extra])
    spec_l = spec
    extra = sorted(plant_ids - spec_ids)
    if extra:
        spec_l = selfloop(spec, [plant.alphabet[e] for e in extra])
    return plant_l, spec_l


def _decentralized(spec: Generator, agents: Sequence[Generator],
                   name: str) -> tuple[Generator, Generator]:
    if agents:
        plant = sync(list(agents))
    else:
        from .automata import Alphabet
        plant = Generator(Alphabet([]), 1, (), 0, [0], name=f"plant({name})")
    plant_l, spec_l = _lift(plant, spec, name)
    result = sup_co(plant_l, spec_l)
    return result.sup.with_name(f"sup_{name}"), plant_l.with_name(f"plant_{name}")


def synth_decentralized(spec: Generator, agents: Sequence[Generator],
                        name: str = "spec") -> Generator:
    """Supervisor for one specification over the synchronous product of its
    event-coupled agents.  An empty result is a pipeline error naming the
    specification."""
    sup, _ = _decentralized(spec, agents, name)
    if sup.is_empty:
        raise PipelineError(f"decentralized synthesis for '{name}' is empty")
    return sup


def synth_coordinator(subsystem: Generator) -> Generator:
    """Coordinator removing the blocking strings of a subsystem: the
    supremal controllable and observable sublanguage of the subsystem's
    marked behavior, against the subsystem itself as plant."""
    spec = trim(subsystem)
    result = sup_co(subsystem, spec)
    return result.sup.with_name(f"coordinator({subsystem.name})")


@dataclass(frozen=True)
class ObserverCheck:
    ok: bool
    witness: tuple[int, ...] | None = None
    event: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_natural_observer(g: Generator, keep) -> ObserverCheck:
    """Decide whether projecting onto `keep` is an observer for g's marked
    behavior: every projected continuation of an observed history to a
    projected-marked string must be matchable by an actual continuation.

    Decided on the pair automaton of g and its determinized projection:
    pairs advance jointly on kept events and g alone otherwise; at every
    reachable pair each projection-enabled kept event must be reachable in g
    after erased events only, and a projection-marked pair must reach a
    marked g-state via erased events.
    """
    keep = frozenset(keep)
    missing = keep - set(g.alphabet.ids)
    if missing:
        raise GeneratorError(f"events {sorted(missing)} not in alphabet")
    g = trim(g)
    if g.is_empty:
        return ObserverCheck(True)
    erased = frozenset(g.alphabet.ids) - keep
    masks, s0, h_marked, h_trans = determinize(g, keep)

    closure_cache: dict[int, tuple[frozenset[int], bool]] = {}

    def closure(q: int) -> tuple[frozenset[int], bool]:
        hit = closure_cache.get(q)
        if hit is not None:
            return hit
        seen = {q}
        stack = [q]
        while stack:
            p = stack.pop()
            for e, d in g.successors(p):
                if e in erased and d not in seen:
                    seen.add(d)
                    stack.append(d)
        result = (frozenset(seen), any(p in g.marked for p in seen))
        closure_cache[q] = result
        return result

    kept_sorted = sorted(keep)
    start = (g.initial, s0)
    parent: dict[tuple, tuple | None] = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        q, s = pair
        reach, can_mark = closure(q)
        for e in kept_sorted:
            if (s, e) in h_trans and not any(g.step(p, e) is not None for p in reach):
                return ObserverCheck(False, _pair_path(pair, parent), e)
        if s in h_marked and not can_mark:
            return ObserverCheck(False, _pair_path(pair, parent), None)
        for e, d in g.successors(q):
            nxt = (d, h_trans[(s, e)]) if e in keep else (d, s)
            if nxt not in parent:
                parent[nxt] = (pair, e)
                queue.append(nxt)
    return ObserverCheck(True)


def _pair_path(pair, parent) -> tuple[int, ...]:
    events = []
    while parent[pair] is not None:
        pair, e = parent[pair]
        events.append(e)
    return tuple(reversed(events))


def abstract(g: Generator, keep) -> Generator:
    """Project onto `keep` after enforcing the natural-observer property;
    refuses otherwise (enlarging the alphabet is up to the caller)."""
    check = check_natural_observer(g, keep)
    if not check.ok:
        raise GeneratorError(
            f"projection is not a natural observer for {g.name or 'generator'}: "
            f"witness {check.witness}, event {check.event}")
    return project(g, keep).with_name(f"abs({g.name})")


@dataclass
class PipelineUnit:
    """One supervisor or coordinator with its own plant scope."""

    name: str
    kind: str  # "supervisor" or "coordinator"
    supervisor: Generator
    plant: Generator
    controllers: dict[int, LocalController] = field(default_factory=dict)
    equivalence: EquivalenceReport | None = None


@dataclass
class LevelRecord:
    index: int
    groups: tuple[tuple[str, ...], ...]
    subsystems: dict[str, Generator]
    coordinators: dict[str, Generator]
    abstraction_alphabet: frozenset[int] | None = None
    abstractions: dict[str, Generator] = field(default_factory=dict)


@dataclass
class PipelineResult:
    units: list[PipelineUnit]
    levels: list[LevelRecord]
    size_table: list[tuple[str, int]]
    warnings: list[str]

    @property
    def verdicts(self) -> dict[str, bool]:
        return {u.name: bool(u.equivalence) for u in self.units}

    def unit(self, name: str) -> PipelineUnit:
        for u in self.units:
            if u.name == name:
                return u
        raise KeyError(name)

    def closed_loop(self, config: PipelineConfig) -> Generator:
        """Composition of all agents with every supervisor and coordinator."""
        parts = [config.agents[name] for name in config.agents]
        parts.extend(u.supervisor for u in self.units)
        return sync(parts)


def _shared_events(models: Mapping[str, Generator]) -> frozenset[int]:
    counts: dict[int, int] = {}
    for m in models.values():
        for e in m.alphabet.ids:
            counts[e] = counts.get(e, 0) + 1
    return frozenset(e for e, n in counts.items() if n >= 2)


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Execute the whole procedure: decentralized synthesis, grouping with
    nonblocking checks and coordinators, observer abstraction until a single
    group remains, then localization of every unit with its own
    equivalence verdict."""
    notes: list[str] = []
    units: list[PipelineUnit] = []
    models: dict[str, Generator] = {}
    size_table: list[tuple[str, int]] = []

    for name, entry in config.specs.items():
        agents = [config.agents[a] for a in entry.agents]
        try:
            sup, plant = _decentralized(entry.generator, agents, name)
        except GeneratorError as exc:
            raise PipelineError(f"step 1, spec '{name}': {exc}") from exc
        if sup.is_empty:
            raise PipelineError(f"step 1, spec '{name}': empty supervisor")
        if not sup.alphabet.controllable:
            notes.append(f"spec '{name}': no controllable events in scope")
        units.append(PipelineUnit(name, "supervisor", sup, plant))
        models[name] = sup
        size_table.append((f"sup_{name}", sup.num_states))

    levels: list[LevelRecord] = []
    level = 0
    while True:
        if level < len(config.groups):
            group_names = config.groups[level]
        else:
            group_names = (tuple(models),)
        flat = sorted(n for grp in group_names for n in grp)
        if flat != sorted(models):
            raise PipelineError(
                f"step 2, level {level}: groups {group_names} must partition "
                f"{sorted(models)}")
        record = LevelRecord(level, group_names, {}, {})
        next_models: dict[str, Generator] = {}
        for gi, grp in enumerate(group_names):
            sub = sync([models[n] for n in grp]).with_name(f"sub{level}_{gi}")
            record.subsystems[sub.name] = sub
            size_table.append((sub.name, sub.num_states))
            if is_nonblocking(sub):
                next_models[sub.name] = sub
            else:
                co = synth_coordinator(sub).with_name(f"co{level}_{gi}")
                if co.is_empty:
                    raise PipelineError(
                        f"step 2, level {level}, group {grp}: empty coordinator")
                record.coordinators[co.name] = co
                units.append(PipelineUnit(co.name, "coordinator", co, sub))
                size_table.append((co.name, co.num_states))
                next_models[sub.name] = trim(sync([sub, co])).with_name(sub.name)
        if len(group_names) == 1:
            levels.append(record)
            break
        if level < len(config.abstraction_alphabets) and \
                config.abstraction_alphabets[level] is not None:
            sigma = config.abstraction_alphabets[level]
        else:
            sigma = _shared_events(next_models)
        record.abstraction_alphabet = sigma
        for name, model in next_models.items():
            keep = sigma & set(model.alphabet.ids)
            check = check_natural_observer(model, keep)
            if not check.ok:
                raise PipelineError(
                    f"step 3, level {level}: projection is not a natural observer "
                    f"for {name} (witness {check.witness}, event {check.event})")
            abstraction = abstract(model, keep)
            record.abstractions[name] = abstraction
            size_table.append((f"abs_{name}", abstraction.num_states))
        levels.append(record)
        models = dict(record.abstractions)
        level += 1
        if level > 64:
            raise PipelineError("grouping does not converge to a single group")

    for unit in units:
        try:
            unit.controllers = localize(unit.plant, unit.supervisor)
        except GeneratorError as exc:
            raise PipelineError(f"step 6, unit '{unit.name}': {exc}") from exc
        unit.equivalence = verify_equivalence(unit.plant, unit.supervisor,
                                              unit.controllers)
        for e, c in sorted(unit.controllers.items()):
            size_table.append((f"{unit.name}_loc{e}", c.num_states))

    return PipelineResult(units, levels, size_table, notes)


def size_table_csv(result: PipelineResult) -> str:
    lines = ["unit,states"]
    lines.extend(f"{name},{size}" for name, size in result.size_table)
    return "\n".join(lines) + "\n"
