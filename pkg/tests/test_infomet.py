import numpy as np
import pytest
from numpy.testing import assert_allclose

from emit_mimo.analysis.infomet import (
    ChannelMatrix,
    MimoLink,
    Provenance,
    available_modes,
    crosstalk_matrix,
    decompose,
    effective_capacity,
    mode_energy_at,
    mode_field_maps,
    normalize,
    shannon_capacity,
    shannon_capacity_logdet,
)
from emit_mimo.analysis.sweeps import planar_array
from emit_mimo.physics.fieldmap import grid_points
from emit_mimo.physics.greens import FreeSpace3DPropagator
from emit_mimo.utils.errors import DegenerateChannelError, DomainError

K = 2.0 * np.pi


def _diag_channel(values, n_rx=None, n_tx=None):
    n = len(values)
    entries = np.zeros((n_rx or n, n_tx or n), dtype=complex)
    entries[np.arange(n), np.arange(n)] = values
    return ChannelMatrix(entries=entries)


@pytest.fixture
def link():
    tx = planar_array(3, 1.5, 0.0)
    rx = planar_array(3, 1.5, 2.0)
    return MimoLink(FreeSpace3DPropagator(K), tx, rx, Provenance.FREE_SPACE_3D)


@pytest.fixture
def random_channel(rng):
    entries = rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4))
    return ChannelMatrix(entries=entries)


class TestNormalize:
    def test_frobenius(self, random_channel):
        h = normalize(random_channel)
        assert_allclose(h.frobenius**2, 20.0, rtol=1e-12)
        assert h.is_normalized
        assert_allclose(h.entries, random_channel.entries * h.alpha)

    def test_zero_channel(self):
        with pytest.raises(DegenerateChannelError):
            normalize(ChannelMatrix(entries=np.zeros((3, 3))))

    def test_non_finite_channel(self):
        with pytest.raises(DomainError):
            normalize(ChannelMatrix(entries=np.array([[1.0, np.nan]])))

    def test_inconsistent_alpha(self):
        with pytest.raises(DomainError):
            ChannelMatrix(entries=np.eye(2), alpha=3.0)


class TestDecompose:
    def test_phase_convention(self, random_channel):
        md = decompose(random_channel)
        for j in range(md.v.shape[1]):
            pivot = md.v[np.argmax(np.abs(md.v[:, j])), j]
            assert abs(pivot.imag) <= 1e-14
            assert pivot.real > 0

    def test_reconstruct(self, random_channel):
        md = decompose(random_channel)
        assert_allclose(md.reconstruct(), random_channel.entries, atol=1e-12)
        assert_allclose(md.u.conj().T @ md.u, np.eye(5), atol=1e-12)
        assert_allclose(md.v.conj().T @ md.v, np.eye(4), atol=1e-12)

    def test_singular_values_sorted(self, random_channel):
        md = decompose(random_channel)
        assert np.all(np.diff(md.s) <= 0)
        assert_allclose(md.sigma_norm.sum(), 1.0)

    def test_deterministic(self, random_channel):
        a, b = decompose(random_channel), decompose(random_channel)
        assert np.array_equal(a.v, b.v)
        assert np.array_equal(a.u, b.u)


class TestEffectiveCapacity:
    def test_uniform_spectrum(self):
        md = decompose(_diag_channel([1.0] * 4))
        assert_allclose(effective_capacity(md), 4.0, rtol=1e-12)

    def test_rank_one(self):
        entries = np.outer([1.0, 2.0, 3.0], [1.0, -1.0, 0.5])
        md = decompose(ChannelMatrix(entries=entries))
        assert_allclose(effective_capacity(md), 1.0, atol=1e-9)

    def test_two_one_one(self):
        md = decompose(_diag_channel([2.0, 1.0, 1.0]))
        assert_allclose(effective_capacity(md), 2.8284, atol=1e-4)
        assert available_modes(md) == 3

    def test_scale_invariant(self, random_channel):
        base = effective_capacity(decompose(random_channel))
        scaled = ChannelMatrix(entries=37.5 * random_channel.entries)
        rescaled = effective_capacity(decompose(normalize(scaled)))
        assert abs(rescaled - base) <= 1e-12 * base

    def test_bounds(self, random_channel):
        c_eff = effective_capacity(decompose(random_channel))
        assert 1.0 <= c_eff <= 4.0

    def test_zero_spectrum(self):
        with pytest.raises(DegenerateChannelError):
            effective_capacity(decompose(ChannelMatrix(entries=np.zeros((2, 2)))))


class TestShannon:
    @pytest.mark.parametrize("snr", [0.0, 1.0, 10.0, 1000.0])
    def test_sum_equals_logdet(self, random_channel, snr):
        md = decompose(random_channel)
        logdet = shannon_capacity_logdet(random_channel.entries, snr, 4)
        assert_allclose(shannon_capacity(md, snr), logdet, rtol=1e-9, atol=1e-12)

    def test_negative_snr(self, random_channel):
        with pytest.raises(DomainError):
            shannon_capacity(decompose(random_channel), -1.0)


class TestModeFields:
    def test_crosstalk_identity_at_channel_samples(self, link, log_messages):
        md = decompose(link.channel())
        ct = crosstalk_matrix(md, link, link.rx)
        assert_allclose(ct, np.eye(md.active_modes()), atol=1e-9)
        assert any("Sparse receive line" in m for m in log_messages)

    def test_crosstalk_dense_line(self, link):
        md = decompose(link.channel())
        xs = np.linspace(-1.0, 1.0, 80)
        line = np.column_stack([xs, np.zeros_like(xs), np.full_like(xs, 2.0)])
        ct = crosstalk_matrix(md, link, line, modes=3)
        assert ct.shape == (3, 3)
        assert_allclose(ct, ct.T)
        assert_allclose(np.diag(ct), 1.0)
        assert np.all((ct >= 0.0) & (ct <= 1.0))

    def test_crosstalk_mode_count_checked(self, link):
        md = decompose(link.channel())
        with pytest.raises(DomainError):
            crosstalk_matrix(md, link, link.rx, modes=0)

    def test_mode_maps_peak_one(self, link):
        md = decompose(link.channel())
        points, shape = grid_points((-1.0, 1.0), (-1.0, 1.0), 9, 9, z=1.0)
        maps = mode_field_maps(md, link, points, count=3, grid_shape=shape)
        assert len(maps) == 3
        for field_map in maps:
            assert_allclose(field_map.peak, 1.0)
            assert field_map.to_gray().shape == (9, 9)

    def test_mode_maps_mask_transmitters(self, link):
        md = decompose(link.channel())
        probes = np.vstack([link.tx[:2], [[0.0, 0.0, 1.0]]])
        field_map = mode_field_maps(md, link, probes, count=1)[0]
        assert field_map.mask.tolist() == [False, False, True]
        assert field_map.values[0] == 0.0

    def test_mode_energy_relative_to_first(self, link):
        md = decompose(link.channel())
        energy = mode_energy_at(md, link, link.rx, count=4)
        assert energy[0] == 1.0
        assert_allclose(energy, (md.s[:4] / md.s[0]) ** 2, rtol=1e-10)
