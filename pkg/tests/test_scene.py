"""Scene graph loading, invariants, consensus application, and state queries."""

import json

import pytest

from sitquery import scene as sg
from sitquery.errors import (
    DomainMismatchError,
    InfeasibleRelationError,
    InvariantError,
    SchemaError,
    UnknownObjectError,
)


def _minimal_doc():
    return {
        "objects": [
            {"id": "tv", "class": "tv", "domains": ["OnOff"],
             "states": {"OnOff": "OFF"}, "room": "livingroom"},
            {"id": "sofa", "class": "sofa", "domains": ["PresentNone"],
             "states": {"PresentNone": "PRESENT"}, "room": "livingroom"},
        ],
        "relationships": [],
    }


def test_load_house(house):
    assert len(house.objects) == 30
    assert house.vocabulary() >= {"fridge", "tv", "computer", "lightswitch"}
    assert ("computer", "INSIDE", "fridge") in house.feasibility_denylist


def test_load_from_text_and_dict():
    doc = _minimal_doc()
    from_dict = sg.load_scene(doc)
    from_text = sg.load_scene(json.dumps(doc))
    assert from_dict.vocabulary() == from_text.vocabulary() == {"tv", "sofa"}


def test_serialize_round_trip(house):
    doc = sg.serialize(house)
    again = sg.load_scene(doc)
    assert again == house


def test_canonical_state_folds_absent():
    assert sg.canonical_state("On") == "ON"
    assert sg.canonical_state("closed") == "CLOSED"
    assert sg.canonical_state("Absent") == "NONE"
    with pytest.raises(DomainMismatchError):
        sg.canonical_state("HALFWAY")


def test_duplicate_id_rejected():
    doc = _minimal_doc()
    doc["objects"].append(dict(doc["objects"][0]))
    with pytest.raises(InvariantError, match="duplicate object id 'tv'"):
        sg.load_scene(doc)


def test_uppercase_class_rejected():
    doc = _minimal_doc()
    doc["objects"][0]["class"] = "TV"
    with pytest.raises(InvariantError, match="lowercase"):
        sg.load_scene(doc)


def test_missing_keys_rejected():
    with pytest.raises(SchemaError, match="objects"):
        sg.load_scene({"relationships": []})
    doc = _minimal_doc()
    del doc["objects"][0]["states"]
    with pytest.raises(SchemaError, match="states"):
        sg.load_scene(doc)


def test_state_must_cover_every_domain():
    doc = _minimal_doc()
    doc["objects"][0]["domains"] = ["OnOff", "OpenClosed"]
    with pytest.raises(InvariantError, match="no current value"):
        sg.load_scene(doc)


def test_state_value_must_match_domain():
    doc = _minimal_doc()
    doc["objects"][0]["states"] = {"OnOff": "OPEN"}
    with pytest.raises(InvariantError, match="not in domain"):
        sg.load_scene(doc)


def test_unknown_room_rejected():
    doc = _minimal_doc()
    doc["objects"][0]["room"] = "garage"
    with pytest.raises(SchemaError, match="garage"):
        sg.load_scene(doc)


def test_dangling_relationship_rejected():
    doc = _minimal_doc()
    doc["relationships"].append({"subject": "tv", "relation": "ON", "target": "table"})
    with pytest.raises(InvariantError, match="does not resolve"):
        sg.load_scene(doc)


def test_self_relationship_rejected():
    doc = _minimal_doc()
    doc["relationships"].append({"subject": "tv", "relation": "ON", "target": "tv"})
    with pytest.raises(InvariantError, match="self-relationship"):
        sg.load_scene(doc)


def test_denylisted_relationship_rejected_at_load():
    doc = _minimal_doc()
    doc["relationships"].append({"subject": "tv", "relation": "ON", "target": "sofa"})
    doc["feasibility_denylist"] = [["tv", "ON", "sofa"]]
    with pytest.raises(InvariantError, match="forbidden"):
        sg.load_scene(doc)


def test_roomless_object_needs_chain_to_room():
    doc = _minimal_doc()
    doc["objects"].append({
        "id": "remote", "class": "remote", "domains": ["PresentNone"],
        "states": {"PresentNone": "PRESENT"}, "room": None,
    })
    with pytest.raises(InvariantError, match="remote"):
        sg.load_scene(doc)
    # A chain through another object placates the check.
    doc["relationships"].append({"subject": "remote", "relation": "ON", "target": "sofa"})
    graph = sg.load_scene(doc)
    assert sg.resolve_rooms(graph, "remote") == {"livingroom"}
    # And so does the explicit unplaced escape hatch.
    doc["relationships"].clear()
    doc["objects"][-1]["unplaced"] = True
    sg.load_scene(doc)


def test_apple_reaches_kitchen_through_fridge(house):
    assert house.objects["apple"].room is None
    assert sg.resolve_rooms(house, "apple") == {"kitchen"}


def test_has_relationship_accepts_ids_classes_and_rooms(house):
    assert house.has_relationship("apple", "INSIDE", "fridge")
    assert not house.has_relationship("apple", "ON", "fridge")
    assert not house.has_relationship("fridge", "INSIDE", "apple")


def test_query_state_existential(house):
    assert sg.query_state(house, "tv", "OFF")
    assert not sg.query_state(house, "tv", "ON")
    assert sg.query_state(house, "popcorn", "NONE")
    # A class the scene lacks entirely counts as absent, not as an error.
    assert sg.query_state(house, "helicopter", "NONE")
    assert not sg.query_state(house, "helicopter", "PRESENT")
    assert not sg.query_state(house, "helicopter", "ON")


def test_apply_consensus_returns_new_graph(house):
    updated = sg.apply_consensus(house, [("tv", "ON"), ("curtains", "CLOSED")])
    assert sg.query_state(updated, "tv", "ON")
    assert sg.query_state(updated, "curtains", "CLOSED")
    # The original graph is untouched.
    assert sg.query_state(house, "tv", "OFF")
    assert sg.query_state(house, "curtains", "OPEN")


def test_apply_consensus_accepts_surface_forms(house):
    updated = sg.apply_consensus(house, [("towels", "Absent")])
    assert sg.query_state(updated, "towels", "NONE")


def test_apply_consensus_unknown_object(house):
    with pytest.raises(UnknownObjectError):
        sg.apply_consensus(house, [("jacuzzi", "ON")])


def test_apply_consensus_wrong_domain(house):
    with pytest.raises(DomainMismatchError):
        sg.apply_consensus(house, [("tv", "OPEN")])


def test_apply_consensus_adds_relation(house):
    updated = sg.apply_consensus(house, [], relations=[("plate", "ON", "sofa")])
    assert updated.has_relationship("plate", "ON", "sofa")
    # Duplicate requests do not duplicate the edge.
    again = sg.apply_consensus(updated, [], relations=[("plate", "ON", "sofa")])
    triples = [r.as_triple() for r in again.relationships]
    assert triples.count(("plate", "ON", "sofa")) == 1


def test_apply_consensus_respects_denylist(house):
    with pytest.raises(InfeasibleRelationError):
        sg.apply_consensus(house, [], relations=[("computer", "INSIDE", "fridge")])


def test_apply_consensus_relation_to_room(house):
    updated = sg.apply_consensus(house, [], relations=[("book", "INSIDE", "kitchen")])
    assert updated.has_relationship("book", "INSIDE", "kitchen")


def test_apply_then_query_random_consistency(house):
    """Seeded sweep: whatever apply_consensus sets, query_state must observe."""
    import random

    rng = random.Random(417)
    classes = sorted(house.vocabulary())
    for _ in range(100):
        picks = rng.sample(classes, rng.randint(1, 4))
        states = []
        for class_name in picks:
            obj = house.by_class(class_name)[0]
            domain = rng.choice(obj.domains)
            value = rng.choice(sg.DOMAIN_VALUES[domain])
            states.append((class_name, value))
        updated = sg.apply_consensus(house, states)
        for class_name, value in states:
            # A later pick may overwrite an earlier one for the same class+domain;
            # only the last write per (class, domain) must hold.
            last = [v for c, v in states
                    if c == class_name and sg.VALUE_DOMAIN[v] == sg.VALUE_DOMAIN[value]][-1]
            assert sg.query_state(updated, class_name, last)
