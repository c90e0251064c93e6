"""Multi-turn dialogue assembly."""
from __future__ import annotations

import logging
from typing import Sequence

from ..exceptions import ContractError
from ..models.dialogue import DialogueRecord, QAItem, Source, TurnKind
from .first_person import convert

logger = logging.getLogger(__name__)

_ORDER = {kind: rank for rank, kind in enumerate(TurnKind)}


def assemble_dialogue(parts: Sequence[QAItem], source: Source, scene_id: str) -> DialogueRecord:
    """Canonical gaze -> description -> reasoning -> decision -> control order, cut to the source's turn limit."""
    if not parts:
        raise ContractError("assemble_dialogue needs at least one Q/A part")
    ordered = sorted(parts, key=lambda part: _ORDER[part.kind])
    if len(ordered) > source.max_turns:
        dropped = [part.kind.value for part in ordered[source.max_turns:]]
        logger.warning(
            f"{scene_id}: {source.value} dialogues hold at most {source.max_turns} turns; dropping {dropped}"
        )
        ordered = ordered[: source.max_turns]

    turns = []
    review = False
    for part in ordered:
        converted = convert(part.answer)
        review = review or converted.needs_review
        turns.append(QAItem(kind=part.kind, question=part.question, answer=converted.text))
    if review:
        logger.info(f"{scene_id}: first-person conversion left constructions for review")
    return DialogueRecord(scene_id=scene_id, source=source, turns=tuple(turns), needs_review=review)
