import asyncio
import itertools
import logging

import numpy as np
import pytest
from pydantic import ValidationError

from dme_driver.decision.templates import category_from_text
from dme_driver.exceptions import ContractError, RecordFormatError, TransportError
from dme_driver.hbd.annotate import annotate
from dme_driver.hbd.augment import OfflineParaphraser, augment
from dme_driver.hbd.dialogue import assemble_dialogue
from dme_driver.hbd.gaze import IMAGE_HEIGHT, IMAGE_WIDTH, gaze_to_bbox, read_gaze_csv, synthesize_gaze_trace
from dme_driver.hbd.records import read_records, write_records
from dme_driver.models.dialogue import BBox, DialogueRecord, GazeTrace, Source, TurnKind
from dme_driver.models.logic import DecisionCategory
from dme_driver.models.scene import Agent


def test_bbox_of_three_points():
    bbox = gaze_to_bbox(GazeTrace(points=((10.0, 20.0), (30.0, 5.0), (15.0, 25.0))))
    assert (bbox.x_min, bbox.y_min, bbox.x_max, bbox.y_max) == (10.0, 5.0, 30.0, 25.0)


def test_bbox_of_one_point_is_degenerate():
    bbox = gaze_to_bbox(GazeTrace(points=((7.0, 8.0),)))
    assert (bbox.x_min, bbox.y_min, bbox.x_max, bbox.y_max) == (7.0, 8.0, 7.0, 8.0)


def test_bbox_contains_every_point():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 25))
        points = tuple((float(x), float(y)) for x, y in rng.uniform(0, 1600, size=(n, 2)))
        bbox = gaze_to_bbox(GazeTrace(points=points))
        assert all(bbox.contains(x, y) for x, y in points)
        assert any(x == bbox.x_min for x, _ in points)
        assert any(y == bbox.y_max for _, y in points)


@pytest.mark.parametrize(
    "points",
    [(), tuple((1.0, 1.0) for _ in range(25)), ((-1.0, 3.0),)],
)
def test_gaze_trace_validation(points):
    with pytest.raises(ValidationError):
        GazeTrace(points=points)


def test_empty_trace_is_a_contract_error():
    with pytest.raises(ContractError):
        gaze_to_bbox(GazeTrace.model_construct(points=()))


def test_bbox_rendering():
    assert BBox(x_min=1, y_min=2, x_max=3.5, y_max=4).render() == "region (1,2)–(3.5,4)"


def test_synthetic_trace(make_scene):
    scene = make_scene(agents=[Agent(10.0, 0.0, 0.0, 0.0)])
    trace = synthesize_gaze_trace(scene)
    assert trace == synthesize_gaze_trace(scene)
    assert len(trace.points) == 24
    assert all(0 <= x < IMAGE_WIDTH and 0 <= y < IMAGE_HEIGHT for x, y in trace.points)


def test_gaze_csv_windows(tmp_path):
    path = tmp_path / "gaze.csv"
    rows = "".join(f"{frame},{100 + frame},{200 + frame}\n" for frame in range(30))
    path.write_text("frame,x,y\n" + rows, encoding="utf-8")
    traces = read_gaze_csv(path)
    assert [len(t.points) for t in traces] == [24, 6]
    assert gaze_to_bbox(traces[1]).render() == "region (124,224)–(129,229)"


def test_gaze_csv_missing_columns(tmp_path):
    path = tmp_path / "gaze.csv"
    path.write_text("frame,x\n0,1\n", encoding="utf-8")
    with pytest.raises(RecordFormatError):
        read_gaze_csv(path)


def test_annotation_follows_the_source(make_scene):
    scene = make_scene()
    assert [p.kind for p in annotate(scene, Source.LOOK_BOTH_WAYS)] == [TurnKind.GAZE]
    assert [p.kind for p in annotate(scene, Source.BDD_X)] == [TurnKind.DESCRIPTION, TurnKind.REASONING, TurnKind.DECISION]
    gaze = annotate(scene, Source.LOOK_BOTH_WAYS)[0].answer
    assert gaze.startswith("The driver is looking at the road ahead, region (")


def test_virtual_dialogue_has_five_turns(make_scene):
    scene = make_scene()
    parts = annotate(scene, Source.VIRTUAL_HBD)
    record = assemble_dialogue(list(reversed(parts)), Source.VIRTUAL_HBD, scene.scene_id)
    assert [t.kind for t in record.turns] == list(TurnKind)
    assert record.turn(TurnKind.DECISION).answer == "I will keep moving forward at my current speed."
    assert record.turn(TurnKind.CONTROL).answer.startswith("I reach 5.0 m/s")
    assert not record.needs_review


def test_open_source_dialogue_is_truncated(make_scene, caplog):
    scene = make_scene()
    parts = annotate(scene, Source.VIRTUAL_HBD)[:4]
    with caplog.at_level(logging.WARNING):
        record = assemble_dialogue(parts, Source.BDD_X, scene.scene_id)
    assert [t.kind for t in record.turns] == [TurnKind.GAZE, TurnKind.DESCRIPTION, TurnKind.REASONING]
    assert "dropping ['decision']" in caplog.text


def test_single_part_and_no_parts(make_scene):
    scene = make_scene()
    gaze = annotate(scene, Source.LOOK_BOTH_WAYS)
    assert len(assemble_dialogue(gaze, Source.LOOK_BOTH_WAYS, scene.scene_id).turns) == 1
    with pytest.raises(ContractError):
        assemble_dialogue([], Source.VIRTUAL_HBD, scene.scene_id)


def test_turn_limits_hold_for_every_subset(make_scene):
    scene = make_scene()
    parts = annotate(scene, Source.VIRTUAL_HBD)
    for source in Source:
        for size in range(1, len(parts) + 1):
            for subset in itertools.combinations(parts, size):
                record = assemble_dialogue(list(subset), source, scene.scene_id)
                assert len(record.turns) == min(size, source.max_turns)
                ranks = [list(TurnKind).index(t.kind) for t in record.turns]
                assert ranks == sorted(ranks)


def test_too_many_turns_is_rejected():
    turns = [
        {"kind": kind, "question": "?", "answer": "I am here."}
        for kind in (TurnKind.GAZE, TurnKind.DESCRIPTION, TurnKind.REASONING, TurnKind.DECISION)
    ]
    with pytest.raises(ValidationError):
        DialogueRecord(scene_id="s", source=Source.BDD_X, turns=turns)


def decision_record(make_scene, category=DecisionCategory.TURN_LEFT):
    scene = make_scene(tag=category)
    return assemble_dialogue(annotate(scene, Source.VIRTUAL_HBD), Source.VIRTUAL_HBD, scene.scene_id)


def test_offline_rewrite():
    assert OfflineParaphraser().rewrite_sync("I will keep moving forward.") == "I am going to continue straight ahead."
    assert category_from_text("I am going to continue straight ahead.") is DecisionCategory.FORWARD


def test_offline_augment_keeps_every_decision(make_scene):
    for category in DecisionCategory:
        record = decision_record(make_scene, category)
        rewritten = asyncio.run(augment(record))
        assert len(rewritten.turns) == len(record.turns)
        before = category_from_text(record.turn(TurnKind.DECISION).answer)
        assert category_from_text(rewritten.turn(TurnKind.DECISION).answer) is before


class SideFlipper:
    async def rewrite(self, text):
        return text.replace("left", "right")


class BrokenParaphraser:
    async def rewrite(self, text):
        raise TransportError("endpoint down", attempts=3)


def test_side_flipping_rewrite_is_rejected(make_scene, caplog):
    record = decision_record(make_scene)
    with caplog.at_level(logging.WARNING):
        rewritten = asyncio.run(augment(record, SideFlipper()))
    assert rewritten.turn(TurnKind.DECISION).answer == record.turn(TurnKind.DECISION).answer
    assert "changes the decision" in caplog.text


def test_failing_paraphraser_falls_back(make_scene, caplog):
    record = decision_record(make_scene)
    with caplog.at_level(logging.WARNING):
        rewritten = asyncio.run(augment(record, BrokenParaphraser()))
    assert rewritten == asyncio.run(augment(record))
    assert "using the offline table" in caplog.text


def test_empty_record_is_unchanged():
    record = DialogueRecord(scene_id="s", source=Source.VIRTUAL_HBD)
    assert asyncio.run(augment(record)) == record


def sample_records(make_scene, count):
    records = []
    for seed in range(count):
        scene = make_scene(seed=seed, agents=[Agent(6.0 + seed % 5, 0.0, 1.0, 0.0)])
        source = list(Source)[seed % len(Source)]
        records.append(assemble_dialogue(annotate(scene, source), source, scene.scene_id))
    return records


def test_records_round_trip(make_scene, tmp_path):
    records = sample_records(make_scene, 100)
    path = tmp_path / "dialogues.hbd.jsonl"
    assert write_records(path, records) == 100
    result = read_records(path, strict=True)
    assert result.ok
    assert result.records == records


def test_malformed_record_line(make_scene, tmp_path):
    path = tmp_path / "dialogues.hbd.jsonl"
    write_records(path, sample_records(make_scene, 9))
    with open(path, "a", encoding="utf-8") as handle:
        handle.write('{"scene_id": "x", "source": "bdd_x", "turns": []}\n')
    result = read_records(path)
    assert len(result.records) == 9
    assert [d.line_number for d in result.diagnostics] == [10]
    with pytest.raises(RecordFormatError):
        read_records(path, strict=True)


def test_empty_record_file(tmp_path):
    path = tmp_path / "empty.hbd.jsonl"
    path.write_text("", encoding="utf-8")
    result = read_records(path)
    assert result.records == [] and result.ok


def test_undecodable_record_line(make_scene, tmp_path):
    path = tmp_path / "dialogues.hbd.jsonl"
    write_records(path, sample_records(make_scene, 3))
    with open(path, "ab") as handle:
        handle.write(b'{"scene_id": "\xff\xfe"}\n')
    write_records(tmp_path / "tail.hbd.jsonl", sample_records(make_scene, 1))
    with open(path, "ab") as handle:
        handle.write((tmp_path / "tail.hbd.jsonl").read_bytes())
    result = read_records(path)
    assert len(result.records) == 4
    assert [d.line_number for d in result.diagnostics] == [4]
    assert "UTF-8" in str(result.diagnostics[0])
    with pytest.raises(RecordFormatError, match="line 4"):
        read_records(path, strict=True)
