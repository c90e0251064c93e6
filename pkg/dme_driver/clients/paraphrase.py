"""Paraphrasing over the text-generation transport."""
from __future__ import annotations

from typing import Protocol

from .text_generation import TextGenerator, generate_with_retries

PARAPHRASE_SYSTEM = (
    "Rewrite the driver's sentence in different words. Keep it in the first "
    "person and keep its meaning, including every direction and maneuver. "
    "Answer with the rewritten sentence only."
)


class Paraphraser(Protocol):
    async def rewrite(self, text: str) -> str: ...


class ParaphraseClient:
    def __init__(self, generator: TextGenerator, max_retries: int = 3, retry_delay_s: float = 0.5):
        self.generator = generator
        self.max_retries = max_retries
        self.retry_delay_s = retry_delay_s

    async def rewrite(self, text: str) -> str:
        reply = await generate_with_retries(
            self.generator,
            PARAPHRASE_SYSTEM,
            [("user", text)],
            max_retries=self.max_retries,
            retry_delay_s=self.retry_delay_s,
        )
        return reply.strip()
