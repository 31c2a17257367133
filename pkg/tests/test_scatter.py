import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from emit_mimo.analysis.infomet import Provenance
from emit_mimo.physics.greens import FreeSpace2DPropagator, Point3, Wavenumber
from emit_mimo.physics.scatter import (
    PEC,
    Dielectric,
    Scatterer,
    ScatteringScene,
    SourceArray,
    Truncation,
    assemble_system,
    channel_matrix_eit,
    grid_scatterers,
    outside_mask,
    remove_random,
    solve_scene,
    suggest_truncation,
    t_coeff,
    total_field,
    validate_geometry,
)
from emit_mimo.utils.config import update_config
from emit_mimo.utils.errors import ConditioningError, DomainError, GeometryError
from emit_mimo.validation.oracles import boundary_residual, scene_boundary_residual

K = 2.0 * np.pi


def _line(count, y, pitch=0.3):
    xs = (np.arange(count) - (count - 1) / 2.0) * pitch
    return np.column_stack([xs, np.full(count, y), np.zeros(count)])


def _incident(scene, sources):
    coefficients = scene.incident_coefficients(sources.xy)
    return np.tensordot(sources.excitations, coefficients, axes=1)


@pytest.fixture
def trio():
    return [
        Scatterer(Point3(-0.6, 0.0), 0.2),
        Scatterer(Point3(0.3, 0.4), 0.15),
        Scatterer(Point3(0.5, -0.5), 0.25),
    ]


@pytest.fixture
def sources():
    return SourceArray(
        (Point3(-1.5, 1.5), Point3(0.2, 2.0), Point3(1.8, -1.0)),
        np.array([1.0, 0.5 - 0.5j, -0.3j]),
    )


class TestTCoefficients:
    def test_pec_symmetric_in_order(self):
        s = Scatterer(Point3(0.0, 0.0), 0.2)
        orders = np.arange(1, 8)
        assert_array_equal(t_coeff(s, K, orders), t_coeff(s, K, -orders))

    @pytest.mark.parametrize("material", [PEC(), Dielectric(4.0), Dielectric(2.25)])
    def test_lossless_energy_relation(self, material):
        t = t_coeff(Scatterer(Point3(0.0, 0.0), 0.3, material), K, np.arange(-6, 7))
        assert_allclose(t.real, -np.abs(t) ** 2, atol=1e-13)

    def test_matched_dielectric_is_transparent(self):
        matched = Scatterer(Point3(0.0, 0.0), 0.3, Dielectric(1.0))
        t = t_coeff(matched, K, np.arange(-5, 6))
        assert_allclose(t, 0.0, atol=1e-15)

    def test_dielectric_from_inner_wavenumber(self):
        material = Dielectric.from_k_inside(2.0 * K, K)
        assert_allclose(material.relative_permittivity, 4.0)
        with pytest.raises(DomainError):
            Dielectric(-1.0)


class TestTruncation:
    def test_rule(self):
        # k·a = 10 → ceil(10 + 4·10^(1/3) + 4) = 23
        cylinder = Scatterer(Point3(0.0, 0.0), 10.0 / K)
        assert suggest_truncation([cylinder], K).n_max == 23

    def test_floor(self):
        tiny = [Scatterer(Point3(0.0, 0.0), 1e-4)]
        assert suggest_truncation(tiny, K).n_max == 6
        assert suggest_truncation(tiny, K, floor=9).n_max == 9

    def test_empty_scene(self):
        with pytest.raises(DomainError):
            suggest_truncation([], K)

    def test_orders(self):
        trunc = Truncation(3)
        assert trunc.size == 7
        assert trunc.orders.tolist() == [-3, -2, -1, 0, 1, 2, 3]
        with pytest.raises(DomainError):
            Truncation(0)


class TestGeometry:
    def test_overlap_names_indices(self):
        cylinders = [
            Scatterer(Point3(0.0, 0.0), 0.1),
            Scatterer(Point3(1.0, 0.0), 0.1),
            Scatterer(Point3(0.15, 0.0), 0.1),
        ]
        with pytest.raises(GeometryError, match="0 and 2"):
            validate_geometry(cylinders)

    def test_touching_rejected(self):
        with pytest.raises(GeometryError):
            ScatteringScene(
                [Scatterer(Point3(0.0, 0.0), 0.1), Scatterer(Point3(0.2, 0.0), 0.1)], K
            )

    def test_source_inside(self, trio):
        scene = ScatteringScene(trio, K)
        with pytest.raises(GeometryError, match="Source 0"):
            scene.solve(SourceArray.unit([Point3(-0.6, 0.05)]))

    def test_source_on_boundary(self, trio):
        with pytest.raises(GeometryError):
            validate_geometry(trio, sources=[Point3(-0.4, 0.0)])

    def test_probe_inside(self, trio, sources):
        solution = solve_scene(trio, sources, K)
        with pytest.raises(GeometryError, match="Probe 1"):
            solution.total_field(np.array([[2.0, 2.0, 0.0], [0.3, 0.41, 0.0]]))

    def test_outside_mask_allows_boundary(self, trio):
        points = np.array([[-0.6, 0.0, 0.0], [-0.4, 0.0, 0.0], [3.0, 3.0, 0.0]])
        assert outside_mask(trio, points).tolist() == [False, True, True]

    def test_non_positive_radius(self):
        with pytest.raises(GeometryError):
            Scatterer(Point3(0.0, 0.0), 0.0)

    def test_coincident_sources(self):
        with pytest.raises(GeometryError):
            SourceArray.unit([Point3(1.0, 1.0), Point3(1.0, 1.0)])


class TestSystem:
    def test_diagonal_blocks(self, trio, sources):
        trunc = Truncation(5)
        z, v = assemble_system(trio, sources, K, trunc)
        size = trunc.size
        assert z.shape == (3 * size, 3 * size)
        assert v.shape == (3 * size,)
        for q in range(3):
            block = z[q * size : (q + 1) * size, q * size : (q + 1) * size]
            assert_array_equal(block, -np.eye(size))

    def test_single_cylinder_coefficients_equal_incident(self, sources):
        scene = ScatteringScene([Scatterer(Point3(0.0, 0.0), 0.2)], K)
        solution = scene.solve(sources)
        incident = _incident(scene, sources)
        assert_allclose(solution.coefficients, incident, rtol=1e-12)

    def test_fixed_point(self, trio, sources):
        scene = ScatteringScene(trio, K)
        solution = scene.solve(sources)
        assert solution.residual <= 1e-10
        assert scene.fixed_point_defect(solution) <= 1e-10

    def test_ill_conditioned_scene(self, trio, sources):
        update_config(cond_limit=1.0)
        with pytest.raises(ConditioningError):
            ScatteringScene(trio, K).solve(sources)

    def test_balanced_matrix_is_similar(self, trio):
        scene = ScatteringScene(trio, K)
        w = scene.balance
        assert w.shape == (scene.dimension,)
        expected = np.diag(w) @ scene.system_matrix() @ np.diag(1.0 / w)
        assert_allclose(scene.balanced_matrix(), expected, rtol=1e-13)

    def test_matches_direct_solve(self, trio, sources):
        scene = ScatteringScene(trio, K)
        solution = scene.solve(sources)
        incident = _incident(scene, sources)
        direct = np.linalg.solve(scene.system_matrix(), -incident.reshape(-1))
        scale = np.abs(direct).max()
        coefficients = solution.coefficients.reshape(-1)
        assert_allclose(coefficients, direct, rtol=1e-8, atol=1e-12 * scale)

    @pytest.mark.slow
    def test_small_cylinder_grid_converges_monotonically(self):
        k = Wavenumber(915e6).k
        cylinders = grid_scatterers(5, 4, 0.06, 0.015)
        tx = SourceArray.unit([Point3(x, -0.6) for x in (-0.375, 0.0, 0.375)])
        scenes = [ScatteringScene(cylinders, k, Truncation(n)) for n in (7, 9, 11)]
        residuals = [scene_boundary_residual(scene.solve(tx)) for scene in scenes]
        assert residuals[0] > residuals[1] > residuals[2]
        assert_allclose(residuals, [6.18e-7, 5.13e-8, 2.11e-9], rtol=2e-2)


class TestBoundary:
    def test_single_pec_boundary(self):
        cylinder = Scatterer(Point3(0.0, 0.0), 0.1)
        solution = solve_scene([cylinder], SourceArray.unit([Point3(1.0, 0.0)]), K)
        assert boundary_residual(solution, 0) <= 1e-3

    def test_multi_pec_boundary(self, trio, sources):
        solution = solve_scene(trio, sources, K)
        for index in range(3):
            assert boundary_residual(solution, index) <= 1e-3
        assert scene_boundary_residual(solution) <= 1e-3

    def test_residual_decreases_with_truncation(self, trio, sources):
        residuals = [
            scene_boundary_residual(solve_scene(trio, sources, K, Truncation(n)))
            for n in (2, 4, 6)
        ]
        assert residuals[0] > residuals[1] > residuals[2]

    def test_total_field_map(self, trio, sources):
        solution = solve_scene(trio, sources, K)
        probes = np.array([[2.0, 2.0, 0.0], [-2.0, -1.0, 0.0]])
        field_map = total_field(solution, probes)
        assert_allclose(field_map.values, solution.total_field(probes))


class TestChannel:
    def test_reciprocity(self, trio):
        tx, rx = _line(4, -1.5), _line(5, 1.5)
        scene = ScatteringScene(trio, K)
        forward = scene.transfer_matrix(tx, rx)
        backward = scene.transfer_matrix(rx, tx)
        assert np.max(np.abs(forward - backward.T)) <= 1e-8 * np.max(np.abs(forward))

    def test_empty_scene_is_free_space(self):
        tx, rx = _line(3, -1.0), _line(4, 1.0)
        channel = channel_matrix_eit([], tx, rx, K)
        assert channel.provenance is Provenance.FREE_SPACE_2D
        free = FreeSpace2DPropagator(K).transfer_matrix(tx, rx)
        assert_array_equal(channel.entries, free)

    def test_factorized_once(self, trio):
        scene = ScatteringScene(trio, K)
        tx = _line(10, -2.0, pitch=0.2)
        channel = channel_matrix_eit(trio, tx, _line(6, 2.0), K, scene=scene)
        scene.transfer_matrix(tx, np.array([[3.0, 0.0, 0.0]]))
        assert channel.provenance is Provenance.SCATTERED
        assert scene.factorization_count == 1

    def test_transfer_matches_single_solves(self, trio):
        scene = ScatteringScene(trio, K)
        tx = _line(3, -1.5)
        probes = np.array([[0.0, 1.5, 0.0], [1.2, 1.0, 0.0]])
        transfer = scene.transfer_matrix(tx, probes)
        for j in range(3):
            single = scene.field_of_sources(SourceArray.unit([Point3(*tx[j])]), probes)
            assert_allclose(transfer[:, j], single, rtol=1e-12)

    def test_threaded_probe_chunks(self, trio):
        update_config(probe_chunk=7)
        tx = _line(3, -1.5)
        probes = np.column_stack(
            [np.linspace(-1.0, 1.0, 40), np.full(40, 1.5), np.zeros(40)]
        )
        serial = ScatteringScene(trio, K, n_jobs=1).transfer_matrix(tx, probes)
        threaded = ScatteringScene(trio, K, n_jobs=4).transfer_matrix(tx, probes)
        assert_array_equal(serial, threaded)


class TestLayouts:
    def test_grid_is_row_major(self):
        grid = grid_scatterers(2, 3, 0.1, 0.01)
        xy = [(round(s.center.x, 6), round(s.center.y, 6)) for s in grid]
        assert xy == [
            (-0.1, -0.05),
            (0.0, -0.05),
            (0.1, -0.05),
            (-0.1, 0.05),
            (0.0, 0.05),
            (0.1, 0.05),
        ]

    def test_random_removal_is_seeded(self):
        grid = grid_scatterers(10, 15, 0.06, 0.015)
        first = remove_random(grid, 60, seed=2023)
        assert len(first) == 90
        assert first == remove_random(grid, 60, seed=2023)
        assert first != remove_random(grid, 60, seed=2024)

    def test_removal_count_checked(self):
        with pytest.raises(GeometryError):
            remove_random(grid_scatterers(2, 2, 0.1, 0.01), 5, seed=0)
