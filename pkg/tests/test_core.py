import math

import numpy as np
import pytest

from ringnet.core import (ConfigError, ForceParams, NetworkConfig, RadioParams,
                          ang_dist, energy_receive, energy_send, lattice_spacing,
                          uniform_disk)

TABLE_RADIO = RadioParams()


def test_lattice_spacing_known_values():
    # frozen from the closed form, cross-checked by the tiling identity below
    assert lattice_spacing(100.0, 103) == pytest.approx(10.782819205338367, rel=1e-12)
    assert lattice_spacing(100.0, 200) == pytest.approx(7.756235097864204, rel=1e-12)


@pytest.mark.parametrize("radius,count", [(100.0, 103), (100.0, 200), (250.0, 57), (30.0, 8)])
def test_lattice_tiling_identity(radius, count):
    # (N+1) hexagons of side l cover the disk exactly
    side = lattice_spacing(radius, count)
    hex_area = 3.0 * math.sqrt(3.0) / 2.0 * side * side
    assert (count + 1) * hex_area == pytest.approx(math.pi * radius * radius, rel=1e-9)


def test_lattice_spacing_scales_linearly():
    base = lattice_spacing(100.0, 103)
    assert lattice_spacing(200.0, 103) == pytest.approx(2.0 * base, rel=1e-12)


def test_lattice_spacing_rejects_bad_inputs():
    with pytest.raises(ConfigError):
        lattice_spacing(0.0, 103)
    with pytest.raises(ConfigError):
        lattice_spacing(100.0, 0)


def test_radio_threshold_distance():
    assert TABLE_RADIO.d_threshold == pytest.approx(87.70580193070292, rel=1e-12)


def test_energy_send_zero_bits():
    assert energy_send(0, 55.0, TABLE_RADIO) == 0.0


def test_energy_send_free_space_values():
    # 1000 bits over the expected first-ring hop and the innermost hop (k=4)
    assert energy_send(1000, 29.8094, TABLE_RADIO) == pytest.approx(5.8886003283599993e-05, rel=1e-12)
    assert energy_send(1000, 12.5, TABLE_RADIO) == pytest.approx(5.15625e-05, rel=1e-12)


def test_energy_send_multipath_branch():
    d = 100.0  # beyond the threshold distance
    expected = 1000 * 50e-9 + 1000 * 0.0013e-12 * d ** 4
    assert energy_send(1000, d, TABLE_RADIO) == pytest.approx(expected, rel=1e-12)


def test_energy_send_continuous_at_threshold():
    d = TABLE_RADIO.d_threshold
    below = energy_send(1000, d * (1 - 1e-12), TABLE_RADIO)
    at = energy_send(1000, d, TABLE_RADIO)
    assert at == pytest.approx(below, rel=1e-9)


def test_energy_send_monotone():
    rng = np.random.default_rng(7)
    last = -1.0
    for d in np.sort(rng.uniform(0, 150, 64)):
        e = energy_send(1000, float(d), TABLE_RADIO)
        assert e >= last
        last = e
    for c in (0, 10, 500, 1000, 5000):
        assert energy_send(c + 1, 40.0, TABLE_RADIO) > energy_send(c, 40.0, TABLE_RADIO)


def test_energy_receive():
    assert energy_receive(1000, TABLE_RADIO) == pytest.approx(5e-05, rel=1e-12)
    assert energy_receive(0, TABLE_RADIO) == 0.0


def test_radio_rejects_nonpositive():
    with pytest.raises(ConfigError):
        RadioParams(e_elec=0.0)
    with pytest.raises(ConfigError):
        RadioParams(eps_amp=-1e-12)


def test_config_defaults_valid():
    cfg = NetworkConfig()
    assert cfg.annulus_width == 25.0
    s3l = math.sqrt(3.0) * cfg.lattice_spacing
    assert 0 < cfg.force.d0 < s3l / 2
    assert cfg.force.friction < cfg.force.friction_bound(cfg.lattice_spacing)


def test_config_rejects_friction_bound_violation():
    # the default buffering distance leaves too little repulsion at range
    with pytest.raises(ConfigError):
        NetworkConfig(force=ForceParams(eta=2000.0, lam=0.4))


def test_config_rejects_bad_geometry():
    with pytest.raises(ConfigError):
        NetworkConfig(radius=-1.0)
    with pytest.raises(ConfigError):
        NetworkConfig(annulus_count=1)
    with pytest.raises(ConfigError):
        NetworkConfig(death_threshold=2.0)


def test_ang_dist_wraps():
    assert ang_dist(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2, abs=1e-12)
    assert ang_dist(1.0, 1.0) == 0.0


def test_uniform_disk_contained():
    pts = uniform_disk(np.random.default_rng(3), 500, 42.0)
    assert np.hypot(pts[:, 0], pts[:, 1]).max() <= 42.0
