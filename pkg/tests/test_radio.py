import math

import numpy as np
import pytest

from dms import (ChannelModel, McsTable, best_rate, compute_gains, default_mcs_table,
                 generate_hex_topology, sinr)
from dms.errors import ConfigurationError
from dms.radio import LinkGainMatrix, Topology


def test_hex_topology_standard_scenario():
    topo = generate_hex_topology(7, 200, (300, 500), 10, seed=1)
    assert topo.n_bs == 7
    assert topo.n_users == 70
    w, h = topo.area
    for x, y in topo.bs_positions + topo.user_positions:
        assert 0 <= x <= w and 0 <= y <= h
    # the requested pitch cannot fit this area; the grid is compressed
    assert topo.effective_isd < topo.isd


def test_hex_topology_dense_fits_at_full_pitch():
    topo = generate_hex_topology(28, 80, (300, 500), 0, seed=2)
    assert topo.n_bs == 28
    assert topo.effective_isd == pytest.approx(80.0)
    pos = np.array(topo.bs_positions)
    d = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 80.0 - 1e-9


def test_hex_topology_strict_rejects_unfittable_grid():
    with pytest.raises(ConfigurationError):
        generate_hex_topology(7, 200, (300, 500), 0, seed=1, strict=True)


def test_hex_topology_degenerate_single_site():
    topo = generate_hex_topology(1, 500, (100, 100), 0, seed=9)
    assert topo.n_bs == 1
    assert topo.n_users == 0


def test_hex_topology_deterministic():
    a = generate_hex_topology(7, 200, (300, 500), 10, seed=42)
    b = generate_hex_topology(7, 200, (300, 500), 10, seed=42)
    assert a == b


def test_users_live_in_their_voronoi_cell():
    topo = generate_hex_topology(7, 200, (300, 500), 10, seed=3)
    bs = np.array(topo.bs_positions)
    for u, (x, y) in enumerate(topo.user_positions):
        d = np.hypot(bs[:, 0] - x, bs[:, 1] - y)
        assert int(np.argmin(d)) == topo.association[u]


def test_topology_json_round_trip(tmp_path):
    from dms.scenario import load_topology, save_topology
    topo = generate_hex_topology(3, 150, (400, 400), 4, seed=5)
    save_topology(tmp_path / "t.json", topo)
    assert load_topology(tmp_path / "t.json") == topo


def test_pathloss_reference_value():
    # PL(1 km) = 128.1 dB with the default coefficients
    topo = Topology(bs_positions=((0.0, 0.0),), user_positions=((1000.0, 0.0),),
                    association=(0,), area=(2000.0, 2000.0), isd=1.0,
                    effective_isd=1.0, grid_rc=((0, 0),))
    model = ChannelModel(fading="none")
    g = compute_gains(topo, model, 0).gains
    assert g[0, 0] == pytest.approx(10 ** (-12.81), rel=1e-12)


def test_equal_distances_equal_gains():
    topo = Topology(bs_positions=((0.0, 0.0),),
                    user_positions=((500.0, 0.0), (0.0, 500.0)),
                    association=(0, 0), area=(1000.0, 1000.0), isd=1.0,
                    effective_isd=1.0, grid_rc=((0, 0),))
    g = compute_gains(topo, ChannelModel(fading="none"), 0).gains
    assert g[0, 0] == g[1, 0]


def test_gains_translation_invariant():
    def shifted(dx, dy):
        return Topology(bs_positions=((10.0 + dx, 20.0 + dy),),
                        user_positions=((310.0 + dx, 420.0 + dy),),
                        association=(0,), area=(5000.0, 5000.0), isd=1.0,
                        effective_isd=1.0, grid_rc=((0, 0),))
    g1 = compute_gains(shifted(0, 0), ChannelModel(fading="none"), 0).gains
    g2 = compute_gains(shifted(700, 900), ChannelModel(fading="none"), 0).gains
    assert g1[0, 0] == g2[0, 0]


def test_min_distance_clamp():
    topo = Topology(bs_positions=((0.0, 0.0),), user_positions=((0.0, 0.0),),
                    association=(0,), area=(100.0, 100.0), isd=1.0,
                    effective_isd=1.0, grid_rc=((0, 0),))
    g = compute_gains(topo, ChannelModel(fading="none", min_distance_m=10.0), 0).gains
    pl = 128.1 + 37.6 * math.log10(10.0 / 1000.0)
    assert g[0, 0] == pytest.approx(10 ** (-pl / 10))


def test_rayleigh_fading_unit_mean():
    n = 10 ** 6
    topo = Topology(bs_positions=((0.0, 0.0),),
                    user_positions=tuple((100.0, 0.0) for _ in range(n)),
                    association=tuple(0 for _ in range(n)),
                    area=(200.0, 200.0), isd=1.0, effective_isd=1.0, grid_rc=((0, 0),))
    plain = compute_gains(topo, ChannelModel(fading="none"), 0).gains
    faded = compute_gains(topo, ChannelModel(fading="rayleigh"), 12345).gains
    factor = faded / plain
    assert abs(factor.mean() - 1.0) < 0.01


def test_fading_deterministic_per_seed():
    topo = generate_hex_topology(3, 100, (300, 300), 5, seed=1)
    m = ChannelModel(fading="rayleigh")
    a = compute_gains(topo, m, 7).gains
    b = compute_gains(topo, m, 7).gains
    c = compute_gains(topo, m, 8).gains
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sinr_no_interferers():
    gains = LinkGainMatrix(np.array([[2e-10, 1e-10]]))
    assert sinr(gains, 0, 0, {0}, 1.0, 1e-12) == pytest.approx(2e-10 / 1e-12)


def test_sinr_symmetric_limit():
    gains = LinkGainMatrix(np.array([[1e-9, 1e-9]]))
    s = sinr(gains, 0, 0, {0, 1}, 1.0, 1e-20)
    assert s == pytest.approx(1.0, rel=1e-9)


def test_sinr_hand_computed():
    gains = LinkGainMatrix(np.array([[4e-10, 1e-10, 3e-10]]))
    p, n0 = 2.0, 1e-10
    expected = (2.0 * 4e-10) / (1e-10 + 2.0 * 1e-10 + 2.0 * 3e-10)
    assert sinr(gains, 0, 0, {1, 2}, p, n0) == pytest.approx(expected, rel=1e-12)
    # serving station in the active set is ignored
    assert sinr(gains, 0, 0, {0, 1, 2}, p, n0) == pytest.approx(expected, rel=1e-12)


def test_best_rate_below_lowest_threshold():
    assert best_rate(1e-3, default_mcs_table()) == 0.0


def test_best_rate_inclusive_threshold():
    table = default_mcs_table()
    for thr, rate in zip(table.thresholds, table.rates):
        assert best_rate(float(thr), table) == float(rate)


def test_best_rate_top_of_table():
    table = default_mcs_table()
    assert table.n_levels == 15
    assert best_rate(1e9, table) == float(table.rates[-1]) == 111000.0


def test_mcs_table_validation():
    with pytest.raises(ConfigurationError):
        McsTable(np.array([1.0, 0.5]), np.array([10.0, 20.0]))
    with pytest.raises(ConfigurationError):
        McsTable(np.array([0.0, 0.5]), np.array([10.0, 20.0]))
    with pytest.raises(ConfigurationError):
        McsTable(np.array([0.5, 1.0]), np.array([20.0, 10.0]))


def test_gain_matrix_rejects_nonpositive():
    with pytest.raises(ConfigurationError):
        LinkGainMatrix(np.array([[0.0]]))
