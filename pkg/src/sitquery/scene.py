"""Household scene-graph world model.

Objects carry two-valued state domains (On/Off, Open/Closed, Present/None),
live in one of four rooms, and participate in INSIDE/ON relationships.
Graphs are immutable: mutation operations return new graphs, so a loaded
scene can be shared freely across evaluation workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from sitquery.errors import (
    DomainMismatchError,
    InfeasibleRelationError,
    InvariantError,
    SchemaError,
    UnknownObjectError,
)

ROOMS = ("kitchen", "livingroom", "bedroom", "bathroom")

DOMAINS = ("OnOff", "OpenClosed", "PresentNone")

# Canonical value order per domain; also drives prompt serialization.
DOMAIN_VALUES = {
    "OnOff": ("ON", "OFF"),
    "OpenClosed": ("OPEN", "CLOSED"),
    "PresentNone": ("PRESENT", "NONE"),
}

VALUE_DOMAIN = {value: domain for domain, values in DOMAIN_VALUES.items() for value in values}

RELATIONS = ("INSIDE", "ON")


def canonical_state(value: str) -> str:
    """Normalize a state token ("On", "open", "PRESENT") to its canonical form."""
    token = str(value).strip().upper()
    if token == "ABSENT":  # surface form used by consensus queries
        token = "NONE"
    if token not in VALUE_DOMAIN:
        raise DomainMismatchError(f"unknown state value {value!r}")
    return token


@dataclass(frozen=True)
class ObjectNode:
    id: str
    class_name: str
    domains: tuple[str, ...]
    states: Mapping[str, str]  # domain -> current value, exactly one per domain
    room: Optional[str] = None
    unplaced: bool = False

    def state(self, domain: str) -> Optional[str]:
        return self.states.get(domain)


@dataclass(frozen=True)
class Relationship:
    subject: str  # object id
    relation: str  # INSIDE or ON
    target: str  # object id or room name

    def as_triple(self) -> tuple[str, str, str]:
        return (self.subject, self.relation, self.target)


@dataclass(frozen=True)
class SceneGraph:
    objects: Mapping[str, ObjectNode]
    relationships: tuple[Relationship, ...]
    feasibility_denylist: frozenset[tuple[str, str, str]] = field(default_factory=frozenset)

    def vocabulary(self) -> set[str]:
        return {obj.class_name for obj in self.objects.values()}

    def by_class(self, class_name: str) -> list[ObjectNode]:
        """Objects of a class, in document order."""
        return [o for o in self.objects.values() if o.class_name == class_name]

    def has_relationship(self, subject_token: str, relation: str, target_token: str) -> bool:
        """Existential check; subject/target tokens may be ids, class names, or rooms."""
        for rel in self.relationships:
            if rel.relation != relation:
                continue
            subj = self.objects.get(rel.subject)
            if subj is None:
                continue
            if rel.subject != subject_token and subj.class_name != subject_token:
                continue
            if rel.target == target_token:
                return True
            tgt = self.objects.get(rel.target)
            if tgt is not None and tgt.class_name == target_token:
                return True
        return False


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SchemaError(message)


def _check_class_name(name: str) -> None:
    if not name or any(ch.isspace() for ch in name):
        raise InvariantError(f"invalid class name {name!r}: must be nonempty without whitespace")


def _parse_object(entry: dict) -> ObjectNode:
    _require(isinstance(entry, dict), f"object entry must be an object, got {type(entry).__name__}")
    for key in ("id", "class", "domains", "states"):
        _require(key in entry, f"object entry missing key {key!r}: {entry!r}")
    obj_id = str(entry["id"])
    class_name = str(entry["class"])
    _check_class_name(class_name)
    if class_name != class_name.lower():
        raise InvariantError(f"class name {class_name!r} must be lowercase")

    domains = tuple(entry["domains"])
    for domain in domains:
        _require(domain in DOMAIN_VALUES, f"object {obj_id!r}: unknown domain {domain!r}")
    if len(set(domains)) != len(domains):
        raise InvariantError(f"object {obj_id!r} declares a domain twice")

    raw_states = entry["states"]
    _require(isinstance(raw_states, dict), f"object {obj_id!r}: states must be a mapping")
    states = {}
    for domain, value in raw_states.items():
        if domain not in domains:
            raise InvariantError(f"object {obj_id!r}: state for undeclared domain {domain!r}")
        value = canonical_state(value)
        if value not in DOMAIN_VALUES[domain]:
            raise InvariantError(f"object {obj_id!r}: value {value!r} not in domain {domain!r}")
        states[domain] = value
    for domain in domains:
        if domain not in states:
            raise InvariantError(f"object {obj_id!r}: no current value for domain {domain!r}")

    room = entry.get("room")
    if room is not None:
        _require(room in ROOMS, f"object {obj_id!r}: unknown room {room!r}")
    return ObjectNode(
        id=obj_id,
        class_name=class_name,
        domains=domains,
        states=states,
        room=room,
        unplaced=bool(entry.get("unplaced", False)),
    )


def _parse_relationship(entry: dict) -> Relationship:
    _require(isinstance(entry, dict), "relationship entry must be an object")
    for key in ("subject", "relation", "target"):
        _require(key in entry, f"relationship entry missing key {key!r}: {entry!r}")
    relation = str(entry["relation"]).upper()
    _require(relation in RELATIONS, f"unknown relation {entry['relation']!r}")
    return Relationship(subject=str(entry["subject"]), relation=relation, target=str(entry["target"]))


def _check_reachability(graph: SceneGraph) -> None:
    """Every roomless object must reach a room via a relationship chain, unless flagged unplaced."""

    def reaches_room(obj_id: str, seen: set[str]) -> bool:
        if obj_id in seen:
            return False
        seen.add(obj_id)
        for rel in graph.relationships:
            if rel.subject != obj_id:
                continue
            if rel.target in ROOMS:
                return True
            target = graph.objects.get(rel.target)
            if target is not None:
                if target.room is not None or reaches_room(target.id, seen):
                    return True
        return False

    for obj in graph.objects.values():
        if obj.room is None and not obj.unplaced and not reaches_room(obj.id, set()):
            raise InvariantError(f"object {obj.id!r} has no room and no relationship chain to one")


def load_scene(source: Union[str, Path, dict]) -> SceneGraph:
    """Load and validate a scene-graph document (path, JSON text, or parsed dict)."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise SchemaError(f"cannot read scene document {source!r}: {exc}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"scene document is not valid JSON: {exc}") from exc

    _require(isinstance(doc, dict), "scene document must be a JSON object")
    _require("objects" in doc, "scene document missing key 'objects'")
    _require(isinstance(doc["objects"], list), "'objects' must be an array")

    objects: dict[str, ObjectNode] = {}
    for entry in doc["objects"]:
        obj = _parse_object(entry)
        if obj.id in objects:
            raise InvariantError(f"duplicate object id {obj.id!r}")
        objects[obj.id] = obj

    relationships: list[Relationship] = []
    for entry in doc.get("relationships", []):
        rel = _parse_relationship(entry)
        if rel.subject not in objects:
            raise InvariantError(f"relationship subject {rel.subject!r} does not resolve")
        if rel.target not in objects and rel.target not in ROOMS:
            raise InvariantError(f"relationship target {rel.target!r} does not resolve")
        if rel.subject == rel.target:
            raise InvariantError(f"self-relationship on {rel.subject!r}")
        relationships.append(rel)

    denylist = set()
    for entry in doc.get("feasibility_denylist", []):
        _require(
            isinstance(entry, (list, tuple)) and len(entry) == 3,
            f"denylist entry must be a [subject_class, relation, target_class] triple: {entry!r}",
        )
        denylist.add((str(entry[0]), str(entry[1]).upper(), str(entry[2])))

    graph = SceneGraph(
        objects=objects,
        relationships=tuple(relationships),
        feasibility_denylist=frozenset(denylist),
    )

    for rel in graph.relationships:
        if not relation_allowed(graph, rel.subject, rel.relation, rel.target):
            raise InvariantError(
                f"relationship ({rel.subject!r}, {rel.relation}, {rel.target!r}) is forbidden"
            )
    _check_reachability(graph)
    return graph


def serialize(graph: SceneGraph) -> dict:
    """Inverse of load_scene: load_scene(serialize(g)) == g."""
    objects = []
    for obj in graph.objects.values():
        entry = {
            "id": obj.id,
            "class": obj.class_name,
            "domains": list(obj.domains),
            "states": {domain: obj.states[domain] for domain in obj.domains},
            "room": obj.room,
        }
        if obj.unplaced:
            entry["unplaced"] = True
        objects.append(entry)
    return {
        "objects": objects,
        "relationships": [
            {"subject": r.subject, "relation": r.relation, "target": r.target}
            for r in graph.relationships
        ],
        "feasibility_denylist": sorted(list(t) for t in graph.feasibility_denylist),
    }


def _class_of(graph: SceneGraph, token: str) -> str:
    """Class name for a subject/target token (an object id, class name, or room)."""
    if token in graph.objects:
        return graph.objects[token].class_name
    return token


def relation_allowed(graph: SceneGraph, subject: str, relation: str, target: str) -> bool:
    subject_class = _class_of(graph, subject)
    target_class = _class_of(graph, target)
    return (subject_class, relation, target_class) not in graph.feasibility_denylist


def _resolve_object(graph: SceneGraph, token: str) -> ObjectNode:
    """Resolve a token to an object: exact id first, then lowest-id object of the class."""
    if token in graph.objects:
        return graph.objects[token]
    candidates = graph.by_class(token)
    if not candidates:
        raise UnknownObjectError(f"unknown object {token!r}")
    return candidates[0]


def apply_consensus(
    graph: SceneGraph,
    states: Sequence[tuple[str, str]],
    relations: Sequence[Union[Relationship, tuple[str, str, str]]] = (),
) -> SceneGraph:
    """Return a new graph with the requested object states set and relations present.

    Every object of a named class receives the state (query_state is existential,
    so setting all of them keeps apply/query consistent). Untouched objects are
    carried over unchanged.
    """
    new_objects = dict(graph.objects)
    for class_name, value in states:
        value = canonical_state(value)
        targets = graph.by_class(class_name)
        if not targets and class_name in graph.objects:
            targets = [graph.objects[class_name]]
        if not targets:
            raise UnknownObjectError(f"unknown object {class_name!r}")
        domain = VALUE_DOMAIN[value]
        for obj in targets:
            if domain not in obj.domains:
                raise DomainMismatchError(
                    f"object {obj.id!r} has no {domain} domain, cannot set {value}"
                )
            current = new_objects[obj.id]
            new_states = dict(current.states)
            new_states[domain] = value
            new_objects[obj.id] = replace(current, states=new_states)

    new_relationships = list(graph.relationships)
    present = set(r.as_triple() for r in new_relationships)
    for rel in relations:
        if isinstance(rel, Relationship):
            subject, relation, target = rel.as_triple()
        else:
            subject, relation, target = rel
        relation = str(relation).upper()
        if relation not in RELATIONS:
            raise InfeasibleRelationError(f"unknown relation {relation!r}")
        subject_obj = _resolve_object(graph, subject)
        if target in ROOMS:
            target_id = target
        else:
            target_id = _resolve_object(graph, target).id
        if not relation_allowed(graph, subject_obj.id, relation, target_id):
            raise InfeasibleRelationError(
                f"({subject!r}, {relation}, {target!r}) matches the feasibility denylist"
            )
        if subject_obj.id == target_id:
            raise InfeasibleRelationError(f"self-relationship on {subject!r}")
        triple = (subject_obj.id, relation, target_id)
        if triple not in present:
            present.add(triple)
            new_relationships.append(Relationship(*triple))

    return SceneGraph(
        objects=new_objects,
        relationships=tuple(new_relationships),
        feasibility_denylist=graph.feasibility_denylist,
    )


def query_state(graph: SceneGraph, class_name: str, expected: str) -> bool:
    """True iff some object of the class holds the expected value.

    A class absent from the scene evaluates as NONE for the PresentNone domain
    (absence is a value, not an error), and false for anything else.
    """
    expected = canonical_state(expected)
    domain = VALUE_DOMAIN[expected]
    candidates = graph.by_class(class_name)
    if not candidates and class_name in graph.objects:
        candidates = [graph.objects[class_name]]
    if not candidates:
        return expected == "NONE"
    return any(obj.state(domain) == expected for obj in candidates)


def resolve_rooms(graph: SceneGraph, token: str) -> set[str]:
    """Rooms an object (by id or class) resolves to, following relationship chains."""
    if token in graph.objects:
        candidates = [graph.objects[token]]
    else:
        candidates = graph.by_class(token)
    rooms: set[str] = set()
    for obj in candidates:
        rooms |= _object_rooms(graph, obj, set())
    return rooms


def _object_rooms(graph: SceneGraph, obj: ObjectNode, seen: set[str]) -> set[str]:
    if obj.id in seen:
        return set()
    seen.add(obj.id)
    if obj.room is not None:
        return {obj.room}
    rooms: set[str] = set()
    for rel in graph.relationships:
        if rel.subject != obj.id:
            continue
        if rel.target in ROOMS:
            rooms.add(rel.target)
        else:
            target = graph.objects.get(rel.target)
            if target is not None:
                rooms |= _object_rooms(graph, target, seen)
    return rooms
