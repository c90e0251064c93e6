"""Scoring Decision-Maker outputs against reference texts on four dimensions."""
from __future__ import annotations

import asyncio
import logging
import re
from collections import Counter
from typing import Protocol

from ..clients.text_generation import TextGenerator, generate_with_retries
from ..encoding.vocab import words
from ..exceptions import DmeDriverError
from ..models.logic import DriverLogicOutput
from ..models.metrics import JudgeScore

logger = logging.getLogger(__name__)

DIMENSIONS = ("gaze", "scene_understanding", "reasoning", "decision")


def token_f1(pred: str, ref: str) -> float:
    """Harmonic mean of token precision and recall; 1.0 when both texts are empty."""
    pred_tokens, ref_tokens = Counter(words(pred)), Counter(words(ref))
    if not pred_tokens and not ref_tokens:
        return 1.0
    overlap = sum((pred_tokens & ref_tokens).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(pred_tokens.values())
    recall = overlap / sum(ref_tokens.values())
    return 2.0 * precision * recall / (precision + recall)


class Judge(Protocol):
    def score(self, pred: DriverLogicOutput, ref: DriverLogicOutput) -> JudgeScore: ...


class OfflineJudge:
    def score(self, pred: DriverLogicOutput, ref: DriverLogicOutput) -> JudgeScore:
        if pred.category == ref.category:
            decision = 1.0
        else:
            decision = 0.5 * token_f1(pred.decision_text, ref.decision_text)
        return JudgeScore(
            gaze=token_f1(pred.gaze_text, ref.gaze_text),
            scene_understanding=token_f1(pred.description_text, ref.description_text),
            reasoning=token_f1(pred.reasoning_text, ref.reasoning_text),
            decision=decision,
        )


JUDGE_SYSTEM = (
    "You grade a driver's answers against reference answers. For each of gaze, "
    "scene_understanding, reasoning and decision give a score between 0 and 1, "
    "one per line, formatted as 'name: score'."
)
_SCORE_LINE = re.compile(r"^\s*(gaze|scene_understanding|reasoning|decision)\s*:\s*([0-9]*\.?[0-9]+)", re.MULTILINE)


def parse_scores(reply: str) -> JudgeScore | None:
    found = {name: min(1.0, float(value)) for name, value in _SCORE_LINE.findall(reply)}
    if set(found) != set(DIMENSIONS):
        return None
    return JudgeScore(**found)


class RemoteJudge:
    """Asks a text-generation model for the scores; falls back to the offline judge on any failure."""

    def __init__(self, client: TextGenerator, max_retries: int = 3, retry_delay_s: float = 0.5):
        self.client = client
        self.max_retries = max_retries
        self.retry_delay_s = retry_delay_s
        self.offline = OfflineJudge()

    async def ascore(self, pred: DriverLogicOutput, ref: DriverLogicOutput) -> JudgeScore:
        prompt = "\n".join(
            f"{label}: prediction {getattr(pred, field)!r}; reference {getattr(ref, field)!r}"
            for label, field in (
                ("gaze", "gaze_text"),
                ("scene_understanding", "description_text"),
                ("reasoning", "reasoning_text"),
                ("decision", "decision_text"),
            )
        )
        try:
            reply = await generate_with_retries(
                self.client, JUDGE_SYSTEM, [("user", prompt)], self.max_retries, self.retry_delay_s
            )
        except DmeDriverError as e:
            logger.warning(f"Remote judge failed for {pred.scene_id} ({e}); scoring offline")
            return self.offline.score(pred, ref)
        parsed = parse_scores(reply)
        if parsed is None:
            logger.warning(f"Remote judge reply for {pred.scene_id} had no four scores; scoring offline")
            return self.offline.score(pred, ref)
        return parsed

    def score(self, pred: DriverLogicOutput, ref: DriverLogicOutput) -> JudgeScore:
        return asyncio.run(self.ascore(pred, ref))


def judge_logic(pred: DriverLogicOutput, ref: DriverLogicOutput, judge: Judge | None = None) -> JudgeScore:
    return (judge or OfflineJudge()).score(pred, ref)
