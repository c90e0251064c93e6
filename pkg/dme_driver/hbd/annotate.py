"""Raw third-person annotations for a scene, limited to what each source can supply."""
from __future__ import annotations

import math

from ..decision.rules import maneuver_features
from ..decision.scripted import annotate_scene
from ..models.dialogue import SOURCE_TURN_KINDS, QAItem, Source, TurnKind
from ..models.logic import DecisionCategory
from ..models.scene import Scene
from .gaze import gaze_to_bbox, synthesize_gaze_trace

QUESTIONS = {
    TurnKind.GAZE: "Where are you looking?",
    TurnKind.DESCRIPTION: "What do you see around you?",
    TurnKind.REASONING: "What matters most for your next move?",
    TurnKind.DECISION: "What will you do next?",
    TurnKind.CONTROL: "How will you move over the next three seconds?",
}


def control_phrase(scene: Scene) -> str:
    f = maneuver_features(scene.expert, scene.ego)
    return (
        f"The driver reaches {f.end_speed:.1f} m/s with a heading change of "
        f"{round(math.degrees(f.heading_change))} degrees and a lateral offset of {f.lateral:.1f} m."
    )


def annotate(scene: Scene, source: Source, category: DecisionCategory | None = None) -> list[QAItem]:
    """Third-person Q/A items for the turn kinds ``source`` records, in canonical order."""
    texts = annotate_scene(scene, category or scene.tag)
    bbox = gaze_to_bbox(synthesize_gaze_trace(scene))
    texts["gaze"] = f"{texts['gaze'].rstrip('.')}, {bbox.render()}."
    texts["control"] = control_phrase(scene)
    return [QAItem(kind=kind, question=QUESTIONS[kind], answer=texts[kind.value]) for kind in SOURCE_TURN_KINDS[source]]
