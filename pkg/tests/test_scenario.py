from pathlib import Path

import numpy as np
import pytest
import yaml

from emit_mimo.analysis.infomet import Provenance
from emit_mimo.data.scenario import Scenario, SpaceKind, load_scenario, parse_scenario
from emit_mimo.physics.greens import FreeSpace3DPropagator
from emit_mimo.physics.scatter import Dielectric, ScatteringScene
from emit_mimo.utils.errors import ConfigError, GeometryError, ScenarioIOError

from .conftest import SMALL_SCENARIO

SCENARIOS_DIR = Path(__file__).resolve().parents[1] / "scenarios"


class TestParse:
    def test_small_scenario(self, small_scenario_file):
        scenario = load_scenario(small_scenario_file)
        assert scenario.name == "small_pair"
        assert scenario.space is SpaceKind.CYLINDERS
        assert len(scenario.scatterer_list()) == 2
        assert scenario.tx_points().shape == (3, 3)
        assert scenario.provenance() is Provenance.SCATTERED

    def test_round_trip(self):
        scenario = parse_scenario(SMALL_SCENARIO)
        again = parse_scenario(scenario.to_yaml())
        assert again == scenario
        assert again.digest() == scenario.digest()

    def test_yaml_syntax_error_has_location(self):
        with pytest.raises(ConfigError, match=r"line \d+, column \d+"):
            parse_scenario("name: broken\ntx: [1, 2\nfrequency_hz: 1e9\n")

    def test_field_path_in_message(self):
        text = SMALL_SCENARIO.replace("radius_m: 0.015", "radius_m: -0.015")
        with pytest.raises(ConfigError, match="scatterer_grid.radius_m"):
            parse_scenario(text)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="colour"):
            parse_scenario(SMALL_SCENARIO + "colour: blue\n")

    def test_not_a_mapping(self):
        with pytest.raises(ConfigError):
            parse_scenario("- just\n- a list\n")

    def test_free_space_rejects_cylinders(self):
        text = SMALL_SCENARIO.replace("space: cylinders", "space: free_space_2d")
        with pytest.raises(ConfigError, match="Free space cannot hold scatterers"):
            parse_scenario(text)

    def test_dielectric_needs_permittivity(self):
        text = SMALL_SCENARIO.replace(
            "radius_m: 0.015}", "radius_m: 0.015, material: dielectric}"
        )
        with pytest.raises(ConfigError, match="relative_permittivity"):
            parse_scenario(text)

    def test_dielectric_grid(self):
        text = SMALL_SCENARIO.replace(
            "radius_m: 0.015}",
            "radius_m: 0.015, material: dielectric, relative_permittivity: 4.0}",
        )
        cylinders = parse_scenario(text).scatterer_list()
        assert all(isinstance(c.material, Dielectric) for c in cylinders)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioIOError):
            load_scenario(tmp_path / "nope.yaml")


class TestLayout:
    def test_arrays_are_x_major(self):
        scenario = parse_scenario(
            "frequency_hz: 1.0e9\nspace: free_space_3d\n"
            "tx: {count: [2, 2], pitch_m: 1.0, center_m: [0, 0, 0]}\n"
        )
        xy = scenario.tx_points()[:, :2].tolist()
        assert xy == [[-0.5, -0.5], [-0.5, 0.5], [0.5, -0.5], [0.5, 0.5]]

    def test_explicit_points_padded(self):
        scenario = parse_scenario(
            "frequency_hz: 1.0e9\nspace: free_space_2d\n"
            "tx: {points_m: [[0.0, 1.0], [2.0, 3.0, 4.0]]}\n"
        )
        assert scenario.tx_points().tolist() == [[0.0, 1.0, 0.0], [2.0, 3.0, 4.0]]

    def test_multi_element_array_needs_pitch(self):
        with pytest.raises(ConfigError, match="pitch_m"):
            parse_scenario("frequency_hz: 1.0e9\ntx: {count: [3, 1]}\n")

    def test_random_removal(self):
        text = SMALL_SCENARIO.replace(
            "scatterer_grid: {rows: 1, cols: 2, pitch_m: 0.1, radius_m: 0.015}",
            "scatterer_grid: {rows: 3, cols: 4, pitch_m: 0.06, radius_m: 0.01, "
            "remove_count: 5, removal_seed: 3}",
        )
        first = parse_scenario(text).scatterer_list()
        assert len(first) == 7
        assert first == parse_scenario(text).scatterer_list()

    def test_removal_larger_than_grid(self):
        text = SMALL_SCENARIO.replace(
            "radius_m: 0.015}", "radius_m: 0.015, remove_count: 3}"
        )
        with pytest.raises(ConfigError, match="remove_count|exceeds grid size"):
            parse_scenario(text)

    def test_grid_probes_inside_cylinders_are_allowed(self, small_scenario_file):
        scenario = load_scenario(small_scenario_file)
        points, shape = scenario.probe_points()
        assert shape == (11, 11)
        mask = scenario.propagator().valid_probe_mask(scenario.tx_points(), points)
        assert 0 < np.count_nonzero(~mask) < len(points)


class TestGeometryChecks:
    def test_explicit_probe_inside_cylinder(self):
        text = SMALL_SCENARIO.replace(
            "  grid: {x_range_m: [-0.2, 0.2], y_range_m: [-0.2, 0.2], nx: 11, ny: 11}",
            "  points_m: [[0.3, 0.3], [0.05, 0.0]]",
        )
        with pytest.raises(GeometryError, match="Probe 1"):
            parse_scenario(text).check_geometry()

    def test_explicit_probe_on_transmitter(self):
        text = SMALL_SCENARIO.replace(
            "  grid: {x_range_m: [-0.2, 0.2], y_range_m: [-0.2, 0.2], nx: 11, ny: 11}",
            "  points_m: [[0.0, -0.4]]",
        )
        with pytest.raises(GeometryError, match="coincides with tx 1"):
            parse_scenario(text).check_geometry()

    def test_transmitter_inside_cylinder(self, tmp_path):
        path = tmp_path / "bad.yaml"
        text = SMALL_SCENARIO.replace("center_m: [0.0, -0.4]", "center_m: [0.05, 0.0]")
        path.write_text(text, encoding="utf-8")
        with pytest.raises(GeometryError):
            load_scenario(path)
        assert load_scenario(path, check=False).name == "small_pair"


class TestPropagator:
    def test_scattering_scene(self, small_scenario_file):
        scenario = load_scenario(small_scenario_file)
        scene = scenario.propagator(nmax=8)
        assert isinstance(scene, ScatteringScene)
        assert scene.truncation.n_max == 8

    def test_free_space(self, free_space_scenario_file):
        scenario = load_scenario(free_space_scenario_file)
        assert isinstance(scenario.propagator(), FreeSpace3DPropagator)
        link = scenario.link(scenario.propagator())
        assert link.channel().entries.shape == (9, 9)


@pytest.mark.parametrize(
    "path", sorted(SCENARIOS_DIR.glob("*.yaml")), ids=lambda p: p.stem
)
def test_shipped_scenarios_are_valid(path):
    scenario = load_scenario(path)
    assert isinstance(scenario, Scenario)
    assert yaml.safe_load(scenario.to_yaml())["name"] == scenario.name
