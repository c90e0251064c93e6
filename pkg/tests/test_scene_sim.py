import numpy as np
import pytest

from dme_driver.decision.rules import classify_trajectory
from dme_driver.evaluation.metrics import first_collision_index
from dme_driver.exceptions import ContractError, RecordFormatError
from dme_driver.models.logic import DecisionCategory, RuleThresholds
from dme_driver.models.scene import Agent, GridSpec
from dme_driver.sim.generator import SceneConfig, constant, generate_scene, integrate, ramp
from dme_driver.sim.raster import occupancy_at, rasterize_agents, rasterize_bev
from dme_driver.sim.records import read_scenes, rle_decode, rle_encode, scene_to_line, write_scenes


def test_constant_speed_straight_line():
    waypoints = integrate(constant(5.0), constant(0.0))
    expected = [(2.5, 0.0), (5.0, 0.0), (7.5, 0.0), (10.0, 0.0), (12.5, 0.0), (15.0, 0.0)]
    assert np.allclose(waypoints, expected, atol=1e-9)


def test_braking_stops_and_stays():
    waypoints = integrate(ramp(4.0, -2.0), constant(0.0))
    assert np.allclose(waypoints[:, 0], [1.75, 3.0, 3.75, 4.0, 4.0, 4.0], atol=1e-9)
    assert np.allclose(waypoints[:, 1], 0.0)


def test_generation_is_deterministic():
    assert scene_to_line(generate_scene(5)) == scene_to_line(generate_scene(5))
    assert scene_to_line(generate_scene(5)) != scene_to_line(generate_scene(6))


@pytest.mark.parametrize("category", list(DecisionCategory))
def test_expert_realizes_requested_maneuver(category):
    for seed in range(3):
        scene = generate_scene(seed, SceneConfig(scenario=category.value))
        assert scene.tag is category
        assert classify_trajectory(scene.expert, scene.ego, RuleThresholds()) is category
        assert first_collision_index(scene.expert, scene) is None
        assert scene.expert.is_kinematic()


def test_generated_scene_shapes(generated_scenes):
    for scene in generated_scenes:
        assert scene.occupancy.shape == (7, 32, 32)
        assert len(scene.agents) <= 4
        assert scene.scene_id == f"scene-{scene.seed}"


def test_agent_count_is_honored():
    scene = generate_scene(3, SceneConfig(num_agents=2))
    assert len(scene.agents) == 2


@pytest.mark.parametrize(
    "kwargs",
    [{"scenario": "Sideways"}, {"num_agents": 9}, {"num_agents": -1}, {"max_agents": 12}],
)
def test_bad_scene_config(kwargs):
    with pytest.raises(ContractError):
        SceneConfig(**kwargs)


def test_small_agent_footprint():
    grid = rasterize_agents([Agent(3.0, 0.0, 0.0, 0.0, half_length=0.5, half_width=0.5)], GridSpec())
    expected = np.zeros((32, 32), dtype=np.uint8)
    expected[21:23, 15:17] = 1
    assert np.array_equal(grid, expected)


def test_agent_out_of_view():
    assert not rasterize_agents([Agent(30.0, 0.0, 0.0, 0.0)], GridSpec()).any()


def test_occupancy_moves_with_agent(make_scene):
    scene = make_scene(agents=[Agent(3.0, 0.0, 2.0, 0.0, half_length=0.5, half_width=0.5)])
    assert np.array_equal(occupancy_at(scene, 0.0), scene.occupancy[0])
    later = occupancy_at(scene, 1.0)
    assert set(np.nonzero(later)[0]) == {25, 26}
    assert set(np.nonzero(later)[1]) == {15, 16}


def test_occupancy_off_lattice(make_scene):
    scene = make_scene()
    with pytest.raises(ContractError):
        occupancy_at(scene, 0.7)
    with pytest.raises(ContractError):
        occupancy_at(scene, 3.5)


def test_static_agents_do_not_move(make_scene):
    scene = make_scene(agents=[Agent(6.0, 3.5, 0.0, 0.0)])
    first = occupancy_at(scene, 0.0)
    for t in (0.5, 1.0, 1.5, 2.0, 2.5, 3.0):
        assert np.array_equal(occupancy_at(scene, t), first)


def test_bev_features(make_scene):
    scene = make_scene(agents=[Agent(6.0, 0.0, 3.0, 0.0)])
    bev = rasterize_bev(scene)
    assert bev.features.shape == (32, 32, 16)
    assert np.isfinite(bev.features).all()
    assert np.array_equal(bev.occupancy, scene.occupancy)


def test_run_length_codec():
    bits = np.zeros((4, 4), dtype=np.uint8)
    bits[1, 1:3] = 1
    assert rle_encode(bits) == "0:5,2,9"
    assert np.array_equal(rle_decode("0:5,2,9", (4, 4)), bits)
    with pytest.raises(RecordFormatError):
        rle_decode("0:5,2", (4, 4))


def test_scene_records_round_trip(generated_scenes, tmp_path):
    path = tmp_path / "scenes.jsonl"
    assert write_scenes(path, generated_scenes) == len(generated_scenes)
    loaded = read_scenes(path)
    assert [scene_to_line(s) for s in loaded] == [scene_to_line(s) for s in generated_scenes]


def test_malformed_scene_line(generated_scenes, tmp_path):
    path = tmp_path / "scenes.jsonl"
    path.write_text(scene_to_line(generated_scenes[0]) + "\n{not json\n", encoding="utf-8")
    with pytest.raises(RecordFormatError) as excinfo:
        read_scenes(path)
    assert excinfo.value.line_number == 2
