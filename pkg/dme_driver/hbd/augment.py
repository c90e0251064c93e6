"""Dialogue rewriting that keeps content: a remote paraphraser or an offline synonym table."""
from __future__ import annotations

import logging
import re

from ..clients.paraphrase import Paraphraser
from ..decision.templates import category_from_text
from ..exceptions import DmeDriverError
from ..models.dialogue import DialogueRecord, QAItem, TurnKind
from .first_person import to_first_person

logger = logging.getLogger(__name__)

SYNONYMS: tuple[tuple[str, str], ...] = (
    (r"\bI will\b", "I am going to"),
    (r"\bkeep moving forward\b", "continue straight ahead"),
    (r"\bspeed up\b", "accelerate"),
    (r"\bslow down\b", "reduce my speed"),
    (r"\bcome to a stop\b", "bring the car to a stop"),
    (r"\bchange lanes to the (left|right)\b", r"move into the \1 lane"),
    (r"\bat the intersection\b", "at the junction"),
    (r"\bI am looking at\b", "My attention is on"),
    (r"\bvehicle(s?)\b", r"car\1"),
)
_COMPILED = tuple((re.compile(pattern), replacement) for pattern, replacement in SYNONYMS)
_BECAUSE = re.compile(r"^(?P<main>[^.]+?) because (?P<cause>[^.]+)\.$")


def _lower_first(clause: str) -> str:
    if clause.startswith("I ") or clause.startswith("I'"):
        return clause
    return clause[:1].lower() + clause[1:]


class OfflineParaphraser:
    """Deterministic synonym substitution plus 'X because Y.' -> 'Because Y, x.' reordering."""

    def rewrite_sync(self, text: str) -> str:
        out = text
        for pattern, replacement in _COMPILED:
            out = pattern.sub(replacement, out)
        match = _BECAUSE.match(out)
        if match:
            out = f"Because {match['cause']}, {_lower_first(match['main'])}."
        return out

    async def rewrite(self, text: str) -> str:
        return self.rewrite_sync(text)


async def augment(record: DialogueRecord, client: Paraphraser | None = None) -> DialogueRecord:
    """Rewrite every answer; a decision rewrite that changes the mapped category is rejected."""
    if not record.turns:
        return record
    offline = OfflineParaphraser()
    paraphraser = client or offline
    turns = []
    for turn in record.turns:
        try:
            rewritten = await paraphraser.rewrite(turn.answer)
        except DmeDriverError as e:
            logger.warning(f"{record.scene_id}: paraphraser failed ({e}); using the offline table")
            rewritten = offline.rewrite_sync(turn.answer)
        rewritten = to_first_person(rewritten.strip())
        if not rewritten:
            rewritten = turn.answer
        if turn.kind == TurnKind.DECISION and category_from_text(rewritten) != category_from_text(turn.answer):
            logger.warning(f"{record.scene_id}: rewrite {rewritten!r} changes the decision; keeping the original")
            rewritten = turn.answer
        turns.append(QAItem(kind=turn.kind, question=turn.question, answer=rewritten))
    return record.model_copy(update={"turns": tuple(turns)})
