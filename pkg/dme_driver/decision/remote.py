"""Decision-Maker backed by a remote text-generation model."""
from __future__ import annotations

import logging
import math

from ..clients.text_generation import TextGenerator, Turn, generate_with_retries
from ..hbd.first_person import to_first_person
from ..models.logic import DriverLogicOutput
from ..models.scene import Scene
from .scripted import scripted_decision_maker
from .templates import category_from_text

logger = logging.getLogger(__name__)

SYSTEM_PROMPT = (
    "You are the driver of the ego vehicle. Answer every question in the first "
    "person, in one sentence. Vehicle status: {status}"
)

# Asked in order; each answer is appended to the conversation before the next question.
QUESTIONS = (
    ("gaze", "Where are you looking right now?"),
    ("description", "Describe the scene around you."),
    ("reasoning", "What matters most for your next maneuver, and why?"),
    ("decision", "What will you do next?"),
)


def vehicle_status(scene: Scene) -> str:
    return f"speed {scene.ego.speed:.1f} m/s, heading {math.degrees(scene.ego.heading):.0f} degrees."


def scene_summary(scene: Scene) -> str:
    """Plain-text rendering of the scene for the remote model."""
    lines = [f"Scene {scene.scene_id}. Ego at the origin facing +x; +y is to the left."]
    if not scene.agents:
        lines.append("No other vehicles.")
    for k, agent in enumerate(scene.agents, start=1):
        lines.append(
            f"Vehicle {k}: at ({agent.x:.1f}, {agent.y:.1f}) m moving ({agent.vx:.1f}, {agent.vy:.1f}) m/s."
        )
    end = scene.lane.as_array()[-1]
    lines.append(f"The lane centerline ends at ({end[0]:.1f}, {end[1]:.1f}) m.")
    return "\n".join(lines)


async def remote_decision_maker(
    summary: str,
    client: TextGenerator,
    scene: Scene,
    max_retries: int = 3,
    retry_delay_s: float = 0.5,
) -> DriverLogicOutput:
    """Four-turn gaze -> description -> reasoning -> decision conversation.

    Transport failures propagate as TransportError once retries run out; a
    decision the keyword rules cannot place falls back to the scripted output.
    """
    system = SYSTEM_PROMPT.format(status=vehicle_status(scene))
    conversation: list[Turn] = [("user", summary)]
    answers: dict[str, str] = {}
    for kind, question in QUESTIONS:
        conversation.append(("user", question))
        reply = await generate_with_retries(client, system, list(conversation), max_retries, retry_delay_s)
        answers[kind] = to_first_person(reply.strip())
        conversation.append(("assistant", reply))

    category = category_from_text(answers["decision"])
    if category is None or not answers["decision"]:
        logger.warning(f"{scene.scene_id}: could not map decision {answers['decision']!r} to a category; using scripted output")
        return scripted_decision_maker(scene)
    return DriverLogicOutput(
        scene_id=scene.scene_id,
        gaze_text=answers["gaze"],
        description_text=answers["description"],
        reasoning_text=answers["reasoning"],
        decision_text=answers["decision"],
        category=category,
        source="remote",
    )
