"""Synthetic dataset generation and loading: scenes, staged logic, dialogues, vocabulary."""
from __future__ import annotations

import asyncio
import logging
from collections import Counter
from pathlib import Path
from typing import Sequence

from pydantic import BaseModel, ValidationError

from .clients.text_generation import TextGenerationClient
from .config import RunConfig
from .decision.remote import remote_decision_maker, scene_summary
from .decision.scripted import emulate_decision_maker
from .decision.templates import template_corpus
from .encoding.vocab import Vocabulary
from .exceptions import ContractError, RecordFormatError
from .hbd.annotate import annotate
from .hbd.augment import augment
from .hbd.dialogue import assemble_dialogue
from .hbd.records import write_records
from .models.dialogue import DialogueRecord
from .models.logic import DecisionCategory, DriverLogicOutput
from .models.scene import GridSpec, Scene
from .sim.generator import SceneConfig, generate_scene
from .sim.records import read_scenes, write_scenes

logger = logging.getLogger(__name__)

SCENES_FILE = "scenes.jsonl"
LOGIC_FILE = "logic.jsonl"
DIALOGUES_FILE = "dialogues.hbd.jsonl"
VOCAB_FILE = "vocab.tsv"
MANIFEST_FILE = "manifest.json"
SEED_STRIDE = 1_000_003


class Manifest(BaseModel):
    seed: int
    scenes: int
    dialogues: int
    categories: dict[str, int]
    files: list[str]


def scene_seed(seed: int, index: int) -> int:
    return seed * SEED_STRIDE + index


def build_vocabulary() -> Vocabulary:
    """Closed vocabulary of the template corpus, shared by every split."""
    return Vocabulary.build(template_corpus())


def generate_scenes(seed: int, count: int, config: RunConfig) -> list[Scene]:
    if count < 1:
        raise ContractError(f"scene count must be >= 1, got {count}")
    scene_config = SceneConfig(
        scenario=config.data.scenario,
        max_agents=config.data.max_agents,
        grid=GridSpec(config.grid.size, config.grid.resolution),
        thresholds=config.rules,
    )
    return [generate_scene(scene_seed(seed, i), scene_config) for i in range(count)]


async def stage_logic(scenes: Sequence[Scene], config: RunConfig) -> list[DriverLogicOutput]:
    """Decision-Maker outputs for every scene, computed once before any training."""
    if config.data.decision_maker == "scripted":
        return [emulate_decision_maker(scene, config.data.dm_error_rate) for scene in scenes]
    if not config.clients.text_endpoint:
        raise ContractError("decision_maker = 'remote' needs clients.text_endpoint")
    client = TextGenerationClient(config.clients.text_endpoint, config.clients.timeout_s, config.clients.audit_log)
    outputs = []
    for scene in scenes:
        outputs.append(await remote_decision_maker(scene_summary(scene), client, scene, config.clients.max_retries))
    return outputs


async def build_dialogues(scenes: Sequence[Scene], config: RunConfig) -> list[DialogueRecord]:
    source = config.data.source
    records = []
    for scene in scenes:
        record = assemble_dialogue(annotate(scene, source), source, scene.scene_id)
        records.append(record)
        if config.data.augment:
            records.append(await augment(record))
    return records


def write_logic(path: Path, outputs: Sequence[DriverLogicOutput]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for output in outputs:
            handle.write(output.model_dump_json() + "\n")
    logger.info(f"Wrote {len(outputs)} logic outputs to {path}")


def read_logic(path: Path) -> list[DriverLogicOutput]:
    outputs = []
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                outputs.append(DriverLogicOutput.model_validate_json(line))
            except ValidationError as e:
                raise RecordFormatError(str(e), line_number) from e
    return outputs


def generate_dataset(seed: int, count: int, out_dir: Path, config: RunConfig) -> Manifest:
    """Write scenes, staged logic, dialogues, vocabulary and a manifest into ``out_dir``."""
    scenes = generate_scenes(seed, count, config)
    logic = asyncio.run(stage_logic(scenes, config))
    dialogues = asyncio.run(build_dialogues(scenes, config))

    out_dir.mkdir(parents=True, exist_ok=True)
    write_scenes(out_dir / SCENES_FILE, scenes)
    write_logic(out_dir / LOGIC_FILE, logic)
    write_records(out_dir / DIALOGUES_FILE, dialogues)
    build_vocabulary().save(out_dir / VOCAB_FILE)

    counts = Counter(scene.tag.value for scene in scenes)
    manifest = Manifest(
        seed=seed,
        scenes=len(scenes),
        dialogues=len(dialogues),
        categories={category.value: counts.get(category.value, 0) for category in DecisionCategory},
        files=[SCENES_FILE, LOGIC_FILE, DIALOGUES_FILE, VOCAB_FILE],
    )
    (out_dir / MANIFEST_FILE).write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Generated {len(scenes)} scenes in {out_dir}: {manifest.categories}")
    return manifest


def load_dataset(data_dir: Path) -> list[tuple[Scene, DriverLogicOutput]]:
    """Scenes paired with their staged logic outputs by scene id."""
    for name in (SCENES_FILE, LOGIC_FILE):
        if not (data_dir / name).exists():
            raise ContractError(f"{data_dir} has no {name}; run gen-data first")
    scenes = read_scenes(data_dir / SCENES_FILE)
    logic = {output.scene_id: output for output in read_logic(data_dir / LOGIC_FILE)}
    missing = [scene.scene_id for scene in scenes if scene.scene_id not in logic]
    if missing:
        raise RecordFormatError(f"{len(missing)} scenes lack a logic output, first {missing[0]}")
    return [(scene, logic[scene.scene_id]) for scene in scenes]
