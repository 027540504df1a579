import pathlib

import pytest

from sitquery import scene as sg
from sitquery.datapoints import Blocklist, Provenance, SituationalDatapoint

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture()
def house():
    return sg.load_scene(FIXTURES / "house.json")


@pytest.fixture()
def blocklist(house):
    return Blocklist.from_scene(house)


@pytest.fixture()
def dp_factory():
    """Builds datapoints with defaults so tests only spell out what they probe."""

    def make(query, states, relations=(), dp_id="dp-test", **kwargs):
        return SituationalDatapoint(
            id=dp_id,
            query_text=query,
            consensus_states=tuple((c, s) for c, s in states),
            consensus_relations=tuple((a, r, b) for a, r, b in relations),
            provenance=kwargs.get("provenance", Provenance()),
            labels=kwargs.get("labels"),
        )

    return make
