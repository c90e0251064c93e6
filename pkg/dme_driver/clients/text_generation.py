"""Async client for a remote text-generation endpoint.

Wire contract: POST ``{"system": str, "turns": [{"role": str, "text": str}]}``,
answer ``{"text": str}``. Every exchange is appended to an optional audit
file, one JSON object per line.
"""
from __future__ import annotations

import asyncio
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol, Sequence

import aiohttp
from pydantic import BaseModel

from ..config import Settings, get_settings
from ..exceptions import TransportError

logger = logging.getLogger(__name__)

Turn = tuple[str, str]


class TextGenerator(Protocol):
    async def generate(self, system: str, turns: Sequence[Turn]) -> str: ...


class AuditEntry(BaseModel):
    timestamp: datetime
    endpoint: str
    system: str
    turns: list[Turn]
    response: str | None = None
    error: str | None = None


class AuditLog:
    def __init__(self, path: Path):
        self.path = path

    def append(self, entry: AuditEntry) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as handle:
            handle.write(entry.model_dump_json() + "\n")


class TextGenerationClient:
    def __init__(
        self,
        endpoint: str,
        timeout_s: float = 30.0,
        audit_log: Path | None = None,
        settings: Settings | None = None,
    ):
        self.endpoint = endpoint
        self.timeout = aiohttp.ClientTimeout(total=timeout_s)
        self.audit = AuditLog(audit_log) if audit_log is not None else None
        self.settings = settings or get_settings()

    def _record(self, system: str, turns: Sequence[Turn], response: str | None = None, error: str | None = None) -> None:
        if self.audit is None:
            return
        self.audit.append(AuditEntry(
            timestamp=datetime.now(timezone.utc),
            endpoint=self.endpoint,
            system=system,
            turns=list(turns),
            response=response,
            error=error,
        ))

    async def generate(self, system: str, turns: Sequence[Turn]) -> str:
        """One request; transport problems surface as TransportError."""
        payload = {"system": system, "turns": [{"role": role, "text": text} for role, text in turns]}
        headers = {"Accept": "application/json", **self.settings.auth_headers}
        logger.debug(f"Posting {len(turns)} turns to {self.endpoint}")
        try:
            async with aiohttp.ClientSession(timeout=self.timeout) as session:
                async with session.post(self.endpoint, json=payload, headers=headers) as response:
                    if response.status != 200:
                        body = await response.text()
                        raise TransportError(f"{self.endpoint} answered {response.status}: {body[:200]}")
                    data = await response.json()
        except TransportError as e:
            self._record(system, turns, error=str(e))
            raise
        except (aiohttp.ClientError, asyncio.TimeoutError, ValueError) as e:
            self._record(system, turns, error=repr(e))
            raise TransportError(f"request to {self.endpoint} failed: {e!r}") from e

        text = data.get("text") if isinstance(data, dict) else None
        if not isinstance(text, str):
            self._record(system, turns, error=f"no text field in {data!r}")
            raise TransportError(f"{self.endpoint} returned no 'text' field")
        self._record(system, turns, response=text)
        return text


async def generate_with_retries(
    client: TextGenerator,
    system: str,
    turns: Sequence[Turn],
    max_retries: int = 3,
    retry_delay_s: float = 0.5,
) -> str:
    """Retry transport failures up to ``max_retries`` attempts in total."""
    for attempt in range(1, max_retries + 1):
        try:
            return await client.generate(system, turns)
        except TransportError as e:
            if attempt == max_retries:
                logger.error(f"Giving up after {attempt} attempts: {e}")
                raise TransportError(str(e), attempts=attempt) from e
            logger.warning(f"Attempt {attempt}/{max_retries} failed: {e}")
            if retry_delay_s:
                await asyncio.sleep(retry_delay_s * attempt)
    raise TransportError("max_retries must be >= 1", attempts=0)
