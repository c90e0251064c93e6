"""Line-delimited dialogue record files (``*.hbd.jsonl``)."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from pydantic import ValidationError

from ..exceptions import RecordFormatError
from ..models.dialogue import DialogueRecord

logger = logging.getLogger(__name__)


@dataclass
class ReadResult:
    records: list[DialogueRecord] = field(default_factory=list)
    diagnostics: list[RecordFormatError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def write_records(path: Path, records: Iterable[DialogueRecord]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(record.model_dump_json() + "\n")
            count += 1
    logger.info(f"Wrote {count} dialogue records to {path}")
    return count


def read_records(path: Path, strict: bool = False) -> ReadResult:
    """Malformed lines are skipped with a diagnostic, or abort the read when ``strict``."""
    result = ReadResult()
    with open(path, "rb") as handle:
        for line_number, raw in enumerate(handle, start=1):
            try:
                line = raw.decode("utf-8")
                if not line.strip():
                    continue
                result.records.append(DialogueRecord.model_validate_json(line))
            except (UnicodeDecodeError, ValidationError) as e:
                reason = f"not UTF-8 ({e.reason})" if isinstance(e, UnicodeDecodeError) else e.errors()[0]["msg"]
                error = RecordFormatError(f"invalid dialogue record: {reason}", line_number)
                if strict:
                    raise error from e
                logger.warning(f"{path}: {error}")
                result.diagnostics.append(error)
    logger.info(f"Read {len(result.records)} dialogue records from {path} ({len(result.diagnostics)} rejected)")
    return result
