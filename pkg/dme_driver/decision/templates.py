"""Annotation templates for driver-logic texts.

Templates are written the way annotators describe a clip, in the third
person ("The driver ..."); the Decision-Maker stand-in and the dialogue
pipeline both pass them through first-person conversion.
"""
from __future__ import annotations

import re
from typing import Iterator

from ..models.logic import DecisionCategory

DRIVER = "The driver"

NUMBER_WORDS = ("no", "one", "two", "three", "four", "five", "six", "seven", "eight")

SECTORS = (
    "vehicle ahead in the driver's lane",
    "vehicle ahead on the driver's left",
    "vehicle ahead on the driver's right",
    "vehicle behind the driver",
    "vehicle behind on the driver's left",
    "vehicle behind on the driver's right",
)

GEOMETRIES = {
    "straight": "a straight road",
    "left": "a road that bends to the left at an intersection",
    "right": "a road that bends to the right at an intersection",
}

OPEN_ROAD_GAZE = {
    DecisionCategory.TURN_LEFT: "the road on the driver's left",
    DecisionCategory.TURN_RIGHT: "the road on the driver's right",
    DecisionCategory.LANE_CHANGE_LEFT: "the lane on the driver's left",
    DecisionCategory.LANE_CHANGE_RIGHT: "the lane on the driver's right",
}

DECISIONS = {
    DecisionCategory.FORWARD: "The driver will keep moving forward at the driver's current speed.",
    DecisionCategory.ACCELERATE: "The driver will speed up to match the flow of traffic.",
    DecisionCategory.DECELERATE: "The driver will slow down and keep a safe distance.",
    DecisionCategory.STOP: "The driver will come to a stop.",
    DecisionCategory.TURN_LEFT: "The driver will turn left at the intersection.",
    DecisionCategory.TURN_RIGHT: "The driver will turn right at the intersection.",
    DecisionCategory.LANE_CHANGE_LEFT: "The driver will change lanes to the left.",
    DecisionCategory.LANE_CHANGE_RIGHT: "The driver will change lanes to the right.",
}

# Reasoning that needs no attended vehicle.
REASONS = {
    DecisionCategory.FORWARD: "The road ahead is clear and the traffic around the driver keeps a steady pace.",
    DecisionCategory.ACCELERATE: "The driver is slower than the flow of traffic and the road ahead is clear.",
    DecisionCategory.DECELERATE: "The driver is closing in on the traffic ahead.",
    DecisionCategory.STOP: "The way ahead of the driver is blocked.",
    DecisionCategory.TURN_LEFT: "The driver's route continues to the left at the intersection.",
    DecisionCategory.TURN_RIGHT: "The driver's route continues to the right at the intersection.",
    DecisionCategory.LANE_CHANGE_LEFT: "The driver's route requires the lane on the left.",
    DecisionCategory.LANE_CHANGE_RIGHT: "The driver's route requires the lane on the right.",
}

# Reasoning about the attended vehicle, for the categories where it matters.
LEAD_REASONS = {
    DecisionCategory.DECELERATE: "The {sector} is moving slower than the driver.",
    DecisionCategory.STOP: "The {sector} has stopped in front of the driver.",
}


def gaze_phrase(target: str) -> str:
    return f"{DRIVER} is looking at the {target}."


def description_phrase(geometry: str, agent_count: int) -> str:
    count = NUMBER_WORDS[min(agent_count, len(NUMBER_WORDS) - 1)]
    noun = "vehicle" if agent_count == 1 else "vehicles"
    return f"{DRIVER} is on {GEOMETRIES[geometry]} with {count} other {noun} around the driver."


def reasoning_phrase(category: DecisionCategory, sector: str | None) -> str:
    if sector is not None and category in LEAD_REASONS:
        return LEAD_REASONS[category].format(sector=sector)
    return REASONS[category]


def template_corpus() -> Iterator[str]:
    """Every text the templates can produce, in a fixed order."""
    targets = list(SECTORS) + ["road ahead"] + list(OPEN_ROAD_GAZE.values())
    for target in targets:
        yield gaze_phrase(target)
    for geometry in GEOMETRIES:
        for count in range(len(NUMBER_WORDS)):
            yield description_phrase(geometry, count)
    for category in DecisionCategory:
        yield reasoning_phrase(category, None)
        if category in LEAD_REASONS:
            for sector in SECTORS:
                yield reasoning_phrase(category, sector)
        yield DECISIONS[category]


_LEFT_RIGHT = re.compile(r"\b(left|right)\b")

# Lateral rules need a side; checked before the longitudinal ones.
_SIDED_RULES = (
    (re.compile(r"\blanes?\b"), DecisionCategory.LANE_CHANGE_LEFT, DecisionCategory.LANE_CHANGE_RIGHT),
    (re.compile(r"\bturn(s|ing)?\b"), DecisionCategory.TURN_LEFT, DecisionCategory.TURN_RIGHT),
)

_KEYWORD_RULES = (
    (re.compile(r"\b(stop|stops|stopping|halt)\b"), DecisionCategory.STOP),
    (re.compile(r"\b(slow(s|ing)? down|decelerat\w*|brak\w*|reduc\w* (my )?speed)\b"), DecisionCategory.DECELERATE),
    (re.compile(r"\b(speed(s|ing)? up|accelerat\w*|faster)\b"), DecisionCategory.ACCELERATE),
    (re.compile(r"\b(forward|straight|continu\w*|keep (moving|going|driving)|maintain\w*)\b"), DecisionCategory.FORWARD),
)


def category_from_text(text: str) -> DecisionCategory | None:
    """Keyword-map a decision sentence onto a category; None when nothing matches."""
    lowered = text.lower()
    side = _LEFT_RIGHT.search(lowered)
    if side is not None:
        for pattern, left, right in _SIDED_RULES:
            if pattern.search(lowered):
                return left if side.group(1) == "left" else right
    for pattern, category in _KEYWORD_RULES:
        if pattern.search(lowered):
            return category
    return None
