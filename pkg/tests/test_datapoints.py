"""Datapoint records, the blocklist, and the three validity predicates."""

import pytest

from sitquery.datapoints import (
    CONTEXTUAL_DEFERRED,
    CONTEXTUAL_FAIL,
    CONTEXTUAL_PASS,
    Blocklist,
    CategoryLabels,
    Provenance,
    check_abstraction,
    check_binary,
    check_contextual,
    read_jsonl,
    validate,
    write_jsonl,
)
from sitquery.errors import ProviderError, SchemaError


class StubClassifier:
    def __init__(self, verdict):
        self.verdict = verdict
        self.seen = []

    def classify_contextual(self, query_text):
        self.seen.append(query_text)
        if isinstance(self.verdict, Exception):
            raise self.verdict
        return self.verdict


def test_record_round_trip(dp_factory, tmp_path):
    dp = dp_factory(
        "Is the kitchen ready for breakfast?",
        [("toaster", "ON"), ("plate", "PRESENT")],
        [("plate", "ON", "sofa")],
        provenance=Provenance(iteration=3, batch_index=1, model_id="m", regenerations=1),
        labels=CategoryLabels(room="kitchen", situational="yes", temporal="spatial"),
    )
    record = dp.to_record()
    assert set(record) == {"id", "query", "states", "relations", "provenance", "labels"}
    path = tmp_path / "dps.jsonl"
    write_jsonl([dp], path)
    (loaded,) = read_jsonl(path)
    assert loaded == dp


def test_record_missing_key_rejected(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "x", "states": []}\n')
    with pytest.raises(SchemaError, match="query"):
        read_jsonl(path)


def test_blocklist_always_contains_object():
    blocklist = Blocklist()
    assert "object" in blocklist
    assert blocklist.hits("Is any object out of place?") == ["object"]
    assert blocklist.hits("Are all objects stowed?") == ["objects"]


def test_blocklist_from_scene_covers_vocabulary(house, blocklist):
    for class_name in house.vocabulary():
        assert class_name in blocklist


def test_blocklist_plural_fold(blocklist):
    assert blocklist.hits("Are the plates stacked?")
    assert blocklist.hits("Is the plate clean?")
    assert not blocklist.hits("Is the platter clean?")


def test_blocklist_multiword_synonym():
    blocklist = Blocklist(["remote control"])
    assert blocklist.hits("Is the remote control missing?")
    assert blocklist.hits("Were the remote   controls found?")
    assert not blocklist.hits("Is the remote cabin far?")


def test_blocklist_matches_whole_words_only(blocklist):
    # "bed" must not fire inside "bedroom".
    assert not blocklist.hits("Was someone sleeping in the bedroom?")
    assert blocklist.hits("Is the bed made?")


def test_check_abstraction(blocklist):
    assert check_abstraction("Is the dining area set up for dinner?", blocklist)
    assert not check_abstraction("Is the sofa blue?", blocklist)


def test_check_binary():
    assert check_binary("Is the dining area set up for dinner?")
    assert check_binary("Was anyone here earlier?")
    assert check_binary('"Could this wait until morning?"')
    assert not check_binary("What is the color of the car?")
    assert not check_binary("Is the oven on")  # no question mark
    assert not check_binary("")


def test_check_contextual_tri_state():
    assert check_contextual("Is it cozy in here?") == CONTEXTUAL_DEFERRED
    assert check_contextual("Is it cozy in here?", StubClassifier(True)) == CONTEXTUAL_PASS
    assert check_contextual("Is it cozy in here?", StubClassifier(False)) == CONTEXTUAL_FAIL


def test_check_contextual_provider_error_names_datapoint():
    classifier = StubClassifier(ProviderError("backend down"))
    with pytest.raises(ProviderError, match="dp-9"):
        check_contextual("Is it cozy?", classifier, datapoint_id="dp-9")


def test_validate_accepts_good_datapoint(house, blocklist, dp_factory):
    dp = dp_factory("Is the dining area set up for dinner?", [("plate", "PRESENT")])
    verdict = validate(dp, house, blocklist)
    assert verdict.accepted
    assert verdict.reasons == ()


def test_validate_rejects_object_mention(house, blocklist, dp_factory):
    dp = dp_factory("Is the sofa blue?", [("sofa", "PRESENT")])
    verdict = validate(dp, house, blocklist)
    assert not verdict.accepted
    assert not verdict.abstraction_ok
    assert any("sofa" in r for r in verdict.reasons)


def test_validate_rejects_non_binary(house, blocklist, dp_factory):
    dp = dp_factory("What is the color of the car?", [("tv", "ON")])
    verdict = validate(dp, house, blocklist)
    assert not verdict.accepted
    assert not verdict.binary_ok


def test_validate_rejects_empty_states(house, blocklist, dp_factory):
    dp = dp_factory("Is anyone home?", [])
    verdict = validate(dp, house, blocklist)
    assert not verdict.accepted
    assert any("consensus states are empty" in r for r in verdict.reasons)


def test_validate_rejects_unknown_class(house, blocklist, dp_factory):
    dp = dp_factory("Is breakfast cooking?", [("wok", "ON")])
    verdict = validate(dp, house, blocklist)
    assert not verdict.structure_ok
    # But an absent class queried for NONE is satisfiable, hence allowed.
    dp2 = dp_factory("Has the laundry basket been emptied?", [("laundry", "NONE")])
    assert validate(dp2, house, blocklist).accepted


def test_validate_rejects_wrong_domain(house, blocklist, dp_factory):
    dp = dp_factory("Is it cold in here?", [("tv", "OPEN")])
    verdict = validate(dp, house, blocklist)
    assert not verdict.structure_ok
    assert any("no OpenClosed domain" in r for r in verdict.reasons)


def test_validate_rejects_infeasible_relation(house, blocklist, dp_factory):
    dp = dp_factory(
        "Is something strange going on?",
        [("tv", "ON")],
        [("computer", "INSIDE", "fridge")],
    )
    verdict = validate(dp, house, blocklist)
    assert not verdict.structure_ok
    assert any("infeasible" in r for r in verdict.reasons)


def test_validate_rejects_unknown_relation_target(house, blocklist, dp_factory):
    dp = dp_factory("Is it tidy in here?", [("tv", "OFF")], [("tv", "ON", "altar")])
    verdict = validate(dp, house, blocklist)
    assert not verdict.structure_ok
    assert any("unknown relation target 'altar'" in r for r in verdict.reasons)


def test_validate_collects_every_reason(house, blocklist, dp_factory):
    dp = dp_factory("Describe the sofa", [])
    verdict = validate(dp, house, blocklist)
    kinds = {r.split(":")[0] for r in verdict.reasons}
    assert {"abstraction", "binary", "structure"} <= kinds


def test_validate_contextual_fail_blocks(house, blocklist, dp_factory):
    dp = dp_factory("Is the dining area set up for dinner?", [("plate", "PRESENT")])
    verdict = validate(dp, house, blocklist, classifier=StubClassifier(False))
    assert not verdict.accepted
    verdict = validate(dp, house, blocklist, classifier=StubClassifier(True))
    assert verdict.accepted
