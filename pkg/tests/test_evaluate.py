"""Answer handling, oracles, joint success, and metric computation."""

import random

import pytest

from sitquery import evaluate as ev
from sitquery import scene as sg
from sitquery.decompose import ConsensusQuery, decompose
from sitquery.errors import IdMismatchError, SchemaError, UnparseableAnswerError
from sitquery.providers import ReplayChatProvider


def test_answer_from_text_normalization():
    assert ev.Answer.from_text("Yes, it is.") is ev.Answer.YES
    assert ev.Answer.from_text("  NO") is ev.Answer.NO
    assert ev.Answer.from_text("no.") is ev.Answer.NO
    assert ev.Answer.from_text("Cannot answer that.") is ev.Answer.CANNOT_ANSWER
    assert ev.Answer.from_text("Unknown") is ev.Answer.CANNOT_ANSWER
    with pytest.raises(UnparseableAnswerError):
        ev.Answer.from_text("42")
    with pytest.raises(UnparseableAnswerError):
        ev.Answer.from_text("Maybe so")


def test_answer_json_round_trip():
    for answer in ev.Answer:
        assert ev.Answer.from_json(answer.value) is answer
    with pytest.raises(SchemaError):
        ev.Answer.from_json("Dunno")


def test_oracle_consensus_and_situational(house, dp_factory):
    dp = dp_factory(
        "Is the bathroom ready for a shower?",
        [("lightswitch", "ON"), ("towels", "PRESENT"), ("soap", "PRESENT")],
    )
    # Base scene has the lightswitch off, so the situation does not hold.
    assert not ev.oracle_situational(house, dp)
    ready = sg.apply_consensus(house, dp.consensus_states)
    assert ev.oracle_situational(ready, dp)
    assert ev.oracle_consensus(ready, "lightswitch", "ON")
    assert not ev.oracle_consensus(house, "lightswitch", "ON")


def test_oracle_checks_relations_too(house, dp_factory):
    dp = dp_factory("Is a snack cooling?", [("apple", "PRESENT")],
                    [("apple", "INSIDE", "fridge")])
    assert ev.oracle_situational(house, dp)
    dp2 = dp_factory("Is a snack cooling?", [("apple", "PRESENT")],
                     [("apple", "INSIDE", "microwave")])
    assert not ev.oracle_situational(house, dp2)


def test_generator_oracle_consistency_randomized(house, dp_factory):
    """Apply a random consensus: the oracle must say Yes, and flipping any
    single state must turn the answer to No."""
    rng = random.Random(2024)
    classes = sorted(house.vocabulary())
    for trial in range(40):
        picks = rng.sample(classes, rng.randint(1, 4))
        states = []
        seen = set()
        for class_name in picks:
            obj = house.by_class(class_name)[0]
            domain = rng.choice(obj.domains)
            if (class_name, domain) in seen:
                continue
            seen.add((class_name, domain))
            states.append((class_name, rng.choice(sg.DOMAIN_VALUES[domain])))
        dp = dp_factory(f"Is scenario {trial} happening?", states, dp_id=f"dp-{trial}")
        world = sg.apply_consensus(house, states)
        assert ev.oracle_situational(world, dp)
        for flip_at, (class_name, value) in enumerate(states):
            domain = sg.VALUE_DOMAIN[value]
            (other,) = [v for v in sg.DOMAIN_VALUES[domain] if v != value]
            flipped = states[:flip_at] + [(class_name, other)] + states[flip_at + 1:]
            world_flipped = sg.apply_consensus(house, flipped)
            assert not ev.oracle_situational(world_flipped, dp)


def test_joint_success_is_or():
    assert ev.joint_success(False, False) is False
    assert ev.joint_success(True, False) is True
    assert ev.joint_success(False, True) is True
    assert ev.joint_success(True, True) is True


def test_flags_threshold_at_half():
    flags = ev.flags_from_scores(0.5, 0.49)
    assert flags.room and not flags.object and flags.joint
    flags = ev.flags_from_scores(0.0, 0.5)
    assert not flags.room and flags.object and flags.joint
    flags = ev.flags_from_scores(0.0, 0.0)
    assert not flags.joint


def test_compute_metrics_fixture_counts():
    Y, N = ev.Answer.YES, ev.Answer.NO
    pairs = [(Y, Y), (Y, Y), (N, Y), (Y, N), (N, N)]  # TP=2 FP=1 FN=1 TN=1
    metrics = ev.compute_metrics(pairs)
    assert metrics.confusion.tp == 2
    assert metrics.confusion.fp == 1
    assert metrics.confusion.fn == 1
    assert metrics.confusion.tn == 1
    assert metrics.f1_percent == pytest.approx(66.67, abs=0.01)
    assert metrics.accuracy_percent == pytest.approx(60.0, abs=0.01)
    assert metrics.agreement_percent == pytest.approx(60.0, abs=0.01)


def test_compute_metrics_answerability():
    Y, C = ev.Answer.YES, ev.Answer.CANNOT_ANSWER
    pairs = [(Y, Y)] * 71 + [(C, Y)] * 2  # 73 tasks, 2 unanswerable
    metrics = ev.compute_metrics(pairs)
    assert metrics.pairs == 73
    assert metrics.answerability_percent == pytest.approx(97.26, abs=0.01)
    assert metrics.cannot_answer_percent == pytest.approx(2.74, abs=0.01)


def test_compute_metrics_prediction_cannot_counts_against_agreement():
    Y, N, C = ev.Answer.YES, ev.Answer.NO, ev.Answer.CANNOT_ANSWER
    pairs = [(Y, C), (Y, Y)]
    metrics = ev.compute_metrics(pairs)
    assert metrics.confusion.pred_cannot == 1
    assert metrics.agreement_percent == pytest.approx(50.0)
    # The 2x2 confusion only covers decided pairs.
    assert metrics.accuracy_percent == pytest.approx(100.0)


def test_compute_metrics_empty():
    metrics = ev.compute_metrics([])
    assert metrics.pairs == 0
    assert metrics.f1_percent == 0.0
    assert metrics.agreement_percent == 0.0


def test_recorded_answerer_lookup_and_errors():
    rows = [
        {"datapoint_id": "dp-1", "unit_id": "room", "level": "room", "answer": "Yes"},
        {"datapoint_id": "dp-1", "unit_id": "cq-0", "level": "object", "answer": "No"},
    ]
    recorded = ev.RecordedAnswerer(rows)
    assert recorded.lookup("dp-1", "room", "room") is ev.Answer.YES
    assert recorded.lookup("dp-1", "object", "cq-0") is ev.Answer.NO
    with pytest.raises(IdMismatchError):
        recorded.lookup("dp-2", "room", "room")
    with pytest.raises(SchemaError, match="duplicate"):
        ev.RecordedAnswerer(rows + [rows[0]])
    with pytest.raises(SchemaError, match="level"):
        ev.RecordedAnswerer([{"datapoint_id": "d", "unit_id": "u",
                              "level": "house", "answer": "Yes"}])


def test_evaluate_recorded_end_to_end(house, dp_factory):
    dp1 = dp_factory("Is the living room prepared for a movie night?",
                     [("tv", "ON"), ("curtains", "CLOSED")], dp_id="dp-1")
    dp2 = dp_factory("Is the bathroom ready for a shower?",
                     [("lightswitch", "ON"), ("towels", "PRESENT"), ("soap", "PRESENT")],
                     dp_id="dp-2")
    rows = [
        {"datapoint_id": "dp-1", "unit_id": "room", "level": "room", "answer": "Yes"},
        {"datapoint_id": "dp-1", "unit_id": "cq-0", "level": "object", "answer": "No"},
        {"datapoint_id": "dp-1", "unit_id": "cq-1", "level": "object", "answer": "No"},
        {"datapoint_id": "dp-2", "unit_id": "room", "level": "room", "answer": "No"},
        {"datapoint_id": "dp-2", "unit_id": "cq-0", "level": "object", "answer": "Yes"},
        {"datapoint_id": "dp-2", "unit_id": "cq-1", "level": "object", "answer": "Yes"},
        {"datapoint_id": "dp-2", "unit_id": "cq-2", "level": "object", "answer": "Yes"},
    ]
    report = ev.evaluate_recorded([dp1, dp2], house, ev.RecordedAnswerer(rows))
    assert report.room.agreement_percent == pytest.approx(50.0)
    assert report.object.agreement_percent == pytest.approx(80.0)
    r1, r2 = report.joint_results
    assert (r1.flags.room, r1.flags.object, r1.flags.joint) == (False, True, True)
    assert r2.object_score == pytest.approx(2.0 / 3.0)
    assert (r2.flags.room, r2.flags.object, r2.flags.joint) == (True, True, True)
    assert report.joint_success_percent == pytest.approx(100.0)
    text = ev.format_report(report)
    assert "joint over 2 datapoints" in text
    assert "room" in text and "object" in text


def test_evaluate_recorded_missing_prediction_raises(house, dp_factory):
    dp = dp_factory("Is it cozy?", [("floorlamp", "ON")], dp_id="dp-1")
    with pytest.raises(IdMismatchError):
        ev.evaluate_recorded([dp], house, ev.RecordedAnswerer([]))


def test_llm_answerer_asks_and_collects_reasoning(house, dp_factory):
    dp = dp_factory("Is the living room prepared for a movie night?",
                    [("tv", "ON")], dp_id="dp-1")
    chat = ReplayChatProvider([
        {"response": "NO"},
        {"response": "The TV is off, so the room is not set up for watching."},
    ])
    answerer = ev.LlmAnswerer(house, chat)
    assert answerer.answer_room(dp) is ev.Answer.NO
    # Question was genericized before being asked.
    first_question = chat.conversations_seen[0][1]["content"]
    assert first_question == "Is this place prepared for a movie night?"
    # The follow-up echoes the parsed answer and asks for the reason.
    followup = chat.conversations_seen[1][3]["content"]
    assert followup.startswith("Your answer is: No.")
    assert "brief reason" in followup
    assert "object states and relationships" in followup
    assert answerer.reasonings[("dp-1", "room")].startswith("The TV is off")


def test_llm_answerer_object_level(house):
    chat = ReplayChatProvider([{"response": "Yes."}])
    answerer = ev.LlmAnswerer(house, chat, collect_reasoning=False)
    query = ConsensusQuery("dp-1", "tv", "ON", "Is the tv On?")
    assert answerer.answer_object(query) is ev.Answer.YES
    assert chat.conversations_seen[0][1]["content"] == "Is the tv On?"


def test_compare_to_groundtruth_id_checking():
    Y = ev.Answer.YES
    with pytest.raises(IdMismatchError):
        ev.compare_to_groundtruth({"t1": Y}, {"t2": Y})
    metrics = ev.compare_to_groundtruth({"t1": Y}, {"t1": Y})
    assert metrics.agreement_percent == pytest.approx(100.0)
