"""Prompt templates for the generation loop.

The system prompt carries the scene's full state and relationship dictionaries
plus the representative queries already generated; the user prompt states the
generation rules; the re-generation prompt reports the similarity percentage
and the offending queries back to the model within the same conversation.
"""

from __future__ import annotations

from dataclasses import dataclass

from sitquery import scene as sg

SYSTEM_TEMPLATE = """I have a list of objects, and their states, and relationships in a household.
Object states are listed in the OBJ_STATE_DICT dictionary below. Each item has the format OBJECT: [STATES].
STATES, IF PRESENT, can switch between ON/OFF and OPEN/CLOSED. Do not conjure any new objects or states.
OBJ_REL_DICT contains the initial relationships between the objects. These can be changed. For instance, "apple INSIDE fridge" is a valid relation.
OBJ_STATE_DICT :-
{OBJ_STATE_DICT}
OBJ_REL_DICT :-
{OBJ_REL_DICT}
GENERATED_QUERIES :-
{GENERATED_QUERIES}"""

USER_TEMPLATE = """Using OBJ_STATE_DICT and OBJ_REL_DICT, can you generate {N} potential questions, states and relationships that the user might ask about the environment?
These must be about a potential scenario, requiring situational awareness and a consensus on multiple object, their states and relationships.
The output should be lines of the form [Question, Object-State Pairs, Relationships].
Make sure you generate questions very different from those in GENERATED_QUERIES. Get creative with the potential scenarios!
Make sure to use an exhaustive set of relationships and object-state pairs for each query.
The query must have a Yes/No answer.
The query must not directly reference any object or even contain the word 'object'.
Respond with a JSON array only, one element per datapoint, each of the form
{{"query": "...", "states": [["object", "STATE"], ...], "relations": [["subject", "INSIDE", "target"], ...]}}."""

REGEN_TEMPLATE = """{X}% of the questions are similar to what you've already generated earlier! Try again, give me {Y} more.
QUERIES:
{QUERIES}"""


@dataclass(frozen=True)
class PromptBundle:
    system_template: str = SYSTEM_TEMPLATE
    user_template: str = USER_TEMPLATE
    regen_template: str = REGEN_TEMPLATE


DEFAULT_BUNDLE = PromptBundle()


def state_dict_lines(graph: sg.SceneGraph) -> list[str]:
    """One "OBJECT: [STATES]" line per object, in scene document order."""
    lines = []
    for obj in graph.objects.values():
        values = []
        for domain in obj.domains:
            values.extend(sg.DOMAIN_VALUES[domain])
        lines.append(f"{obj.class_name}: [{', '.join(values)}]")
    return lines


def rel_dict_lines(graph: sg.SceneGraph) -> list[str]:
    """Room placements first (document order), then the explicit relationships."""
    lines = []
    for obj in graph.objects.values():
        if obj.room is not None:
            lines.append(f"{obj.class_name} INSIDE {obj.room}")
    for rel in graph.relationships:
        subject = graph.objects[rel.subject].class_name
        target = rel.target if rel.target in sg.ROOMS else graph.objects[rel.target].class_name
        lines.append(f"{subject} {rel.relation} {target}")
    return lines


def render_system_prompt(
    graph: sg.SceneGraph,
    representatives: list[str],
    bundle: PromptBundle = PromptBundle(),
) -> str:
    """Fill the system template from the scene; the representatives section may be empty."""
    return bundle.system_template.format(
        OBJ_STATE_DICT="\n".join(state_dict_lines(graph)),
        OBJ_REL_DICT="\n".join(rel_dict_lines(graph)),
        GENERATED_QUERIES="\n".join(representatives),
    )


def render_user_prompt(n: int, bundle: PromptBundle = PromptBundle()) -> str:
    return bundle.user_template.format(N=n)


def render_regen_prompt(
    percent_similar: float,
    offending_queries: list[str],
    y: int,
    bundle: PromptBundle = PromptBundle(),
) -> str:
    percent = f"{percent_similar:.0f}" if percent_similar == int(percent_similar) else f"{percent_similar:.1f}"
    return bundle.regen_template.format(
        X=percent,
        Y=y,
        QUERIES="\n".join(offending_queries),
    )
