"""Deterministic Decision-Maker stand-in built from the annotation templates."""
from __future__ import annotations

import logging
import math

import numpy as np

from ..hbd.first_person import to_first_person
from ..models.logic import DecisionCategory, DriverLogicOutput
from ..models.scene import Agent, Lane, Scene
from . import templates

logger = logging.getLogger(__name__)

BEND_THRESHOLD = 1.0  # lateral reach of the centerline (m) that counts as a bend

# Categories an imperfect Decision-Maker plausibly confuses with the true one.
CONFUSIONS: dict[DecisionCategory, tuple[DecisionCategory, ...]] = {
    DecisionCategory.FORWARD: (DecisionCategory.ACCELERATE, DecisionCategory.DECELERATE),
    DecisionCategory.ACCELERATE: (DecisionCategory.FORWARD,),
    DecisionCategory.DECELERATE: (DecisionCategory.STOP, DecisionCategory.FORWARD),
    DecisionCategory.STOP: (DecisionCategory.DECELERATE,),
    DecisionCategory.TURN_LEFT: (DecisionCategory.LANE_CHANGE_LEFT, DecisionCategory.DECELERATE),
    DecisionCategory.TURN_RIGHT: (DecisionCategory.LANE_CHANGE_RIGHT, DecisionCategory.DECELERATE),
    DecisionCategory.LANE_CHANGE_LEFT: (DecisionCategory.FORWARD, DecisionCategory.TURN_LEFT),
    DecisionCategory.LANE_CHANGE_RIGHT: (DecisionCategory.FORWARD, DecisionCategory.TURN_RIGHT),
}


def attended_agent(scene: Scene) -> Agent | None:
    """Nearest agent not entirely behind the ego; the nearest overall when every agent is behind."""
    if not scene.agents:
        return None
    ahead = [a for a in scene.agents if a.x + a.half_length > 0.0]
    pool = ahead or list(scene.agents)
    return min(pool, key=lambda a: math.hypot(a.x, a.y))


def sector_of(agent: Agent, lane: Lane) -> str:
    """Third-person sector phrase for where ``agent`` sits relative to the ego."""
    in_lane = abs(agent.y) < lane.width / 2.0
    side = "left" if agent.y > 0 else "right"
    if agent.x > 0:
        if in_lane:
            return "vehicle ahead in the driver's lane"
        return f"vehicle ahead on the driver's {side}"
    if in_lane:
        return "vehicle behind the driver"
    return f"vehicle behind on the driver's {side}"


def lane_geometry(lane: Lane) -> str:
    reach = float(lane.as_array()[-1, 1])
    if reach > BEND_THRESHOLD:
        return "left"
    if reach < -BEND_THRESHOLD:
        return "right"
    return "straight"


def annotate_scene(scene: Scene, category: DecisionCategory) -> dict[str, str]:
    """Third-person gaze, description, reasoning and decision texts for ``category``."""
    agent = attended_agent(scene)
    sector = sector_of(agent, scene.lane) if agent is not None else None
    if sector is not None:
        target = sector
    else:
        target = templates.OPEN_ROAD_GAZE.get(category, "road ahead")
    lead = sector if sector == "vehicle ahead in the driver's lane" else None
    return {
        "gaze": templates.gaze_phrase(target),
        "description": templates.description_phrase(lane_geometry(scene.lane), len(scene.agents)),
        "reasoning": templates.reasoning_phrase(category, lead),
        "decision": templates.DECISIONS[category],
    }


def logic_for(scene: Scene, category: DecisionCategory, source: str = "scripted") -> DriverLogicOutput:
    texts = {kind: to_first_person(text) for kind, text in annotate_scene(scene, category).items()}
    return DriverLogicOutput(
        scene_id=scene.scene_id,
        gaze_text=texts["gaze"],
        description_text=texts["description"],
        reasoning_text=texts["reasoning"],
        decision_text=texts["decision"],
        category=category,
        source=source,
    )


def scripted_decision_maker(scene: Scene) -> DriverLogicOutput:
    return logic_for(scene, scene.tag)


def ground_truth_logic(scene: Scene) -> DriverLogicOutput:
    """Template texts for the scene's own maneuver, the cues of the ground-truth ablation."""
    return logic_for(scene, scene.tag, source="ground_truth")


def emulate_decision_maker(scene: Scene, error_rate: float) -> DriverLogicOutput:
    """Scripted output, swapped for a plausible wrong category on a seeded fraction of scenes."""
    if error_rate <= 0.0:
        return scripted_decision_maker(scene)
    rng = np.random.default_rng([scene.seed, 0xD3])
    if rng.random() >= error_rate:
        return scripted_decision_maker(scene)
    options = CONFUSIONS[scene.tag]
    wrong = options[int(rng.integers(len(options)))]
    logger.debug(f"{scene.scene_id}: emulated Decision-Maker says {wrong.value} instead of {scene.tag.value}")
    return logic_for(scene, wrong, source="scripted-noisy")
