import asyncio
import logging

import pytest

from dme_driver.clients.text_generation import generate_with_retries
from dme_driver.decision.remote import remote_decision_maker, scene_summary
from dme_driver.decision.scripted import CONFUSIONS, emulate_decision_maker, ground_truth_logic, scripted_decision_maker
from dme_driver.decision.templates import category_from_text
from dme_driver.exceptions import TransportError
from dme_driver.models.logic import DecisionCategory as C
from dme_driver.models.scene import Agent


class CannedClient:
    """Answers the four questions in order and remembers how long each conversation was."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.turn_counts = []

    async def generate(self, system, turns):
        self.turn_counts.append(len(turns))
        return self.replies[len(self.turn_counts) - 1]


class FlakyClient:
    def __init__(self, failures):
        self.failures = failures
        self.calls = 0

    async def generate(self, system, turns):
        self.calls += 1
        if self.calls <= self.failures:
            raise TransportError("connection reset")
        return "ok"


def test_open_road_forward(make_scene):
    logic = scripted_decision_maker(make_scene())
    assert logic.category is C.FORWARD
    assert logic.gaze_text == "I am looking at the road ahead."
    assert logic.description_text == "I am on a straight road with no other vehicles around me."
    assert logic.decision_text == "I will keep moving forward at my current speed."


def test_slower_lead_vehicle(make_scene):
    scene = make_scene(agents=[Agent(6.0, 0.0, 2.0, 0.0)], tag=C.DECELERATE, speed=8.0)
    logic = scripted_decision_maker(scene)
    assert logic.category is C.DECELERATE
    assert logic.gaze_text == "I am looking at the vehicle ahead in my lane."
    assert logic.reasoning_text == "The vehicle ahead in my lane is moving slower than me."
    assert scripted_decision_maker(scene) == logic


def test_scripted_category_follows_the_scene(generated_scenes):
    for scene in generated_scenes:
        assert scripted_decision_maker(scene).category is scene.tag
        assert ground_truth_logic(scene).source == "ground_truth"


def test_emulated_error_rate(generated_scenes):
    for scene in generated_scenes:
        assert emulate_decision_maker(scene, 0.0) == scripted_decision_maker(scene)
        wrong = emulate_decision_maker(scene, 1.0)
        assert wrong.category in CONFUSIONS[scene.tag]
        assert wrong.source == "scripted-noisy"
        assert emulate_decision_maker(scene, 1.0) == wrong


@pytest.mark.parametrize(
    "text, expected",
    [
        ("I will turn left at the intersection.", C.TURN_LEFT),
        ("I will change lanes to the right.", C.LANE_CHANGE_RIGHT),
        ("I will come to a stop.", C.STOP),
        ("I will slow down and keep a safe distance.", C.DECELERATE),
        ("I will speed up to match the flow of traffic.", C.ACCELERATE),
        ("I will keep moving forward at my current speed.", C.FORWARD),
        ("Banana.", None),
    ],
)
def test_category_from_text(text, expected):
    assert category_from_text(text) is expected


def test_remote_conversation(make_scene):
    scene = make_scene()
    client = CannedClient([
        "The driver is looking at the road on the right.",
        "The driver is on a straight road.",
        "The driver's route continues to the right.",
        "The driver will turn right at the intersection.",
    ])
    logic = asyncio.run(remote_decision_maker(scene_summary(scene), client, scene, retry_delay_s=0))
    assert logic.category is C.TURN_RIGHT
    assert logic.source == "remote"
    assert logic.gaze_text == "I am looking at the road on the right."
    assert logic.reasoning_text == "My route continues to the right."
    assert client.turn_counts == [2, 4, 6, 8]


def test_unmappable_decision_falls_back(make_scene, caplog):
    scene = make_scene()
    client = CannedClient(["Hmm."] * 4)
    with caplog.at_level(logging.WARNING):
        logic = asyncio.run(remote_decision_maker(scene_summary(scene), client, scene, retry_delay_s=0))
    assert logic == scripted_decision_maker(scene)
    assert "could not map decision" in caplog.text


def test_retries_recover_from_transient_failures():
    client = FlakyClient(failures=2)
    assert asyncio.run(generate_with_retries(client, "system", [("user", "hi")], max_retries=3, retry_delay_s=0)) == "ok"
    assert client.calls == 3


def test_retries_give_up():
    client = FlakyClient(failures=10)
    with pytest.raises(TransportError) as excinfo:
        asyncio.run(generate_with_retries(client, "system", [("user", "hi")], max_retries=3, retry_delay_s=0))
    assert excinfo.value.attempts == 3
    assert client.calls == 3


def test_scene_summary_lists_agents(make_scene):
    summary = scene_summary(make_scene(agents=[Agent(6.0, 0.0, 2.0, 0.0)]))
    assert "Vehicle 1: at (6.0, 0.0) m moving (2.0, 0.0) m/s." in summary
