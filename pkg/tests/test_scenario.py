import math
from dataclasses import replace

import numpy as np
import pytest

from uepram.scenario import (
    ErasureProfile,
    McsTable,
    RadioParams,
    build_sfn,
    build_single_cell,
    erasure_from_sinr,
    erasure_profile,
    hex_sites,
    sinr,
    sinr_all,
)


def test_hex_layout_has_two_rings():
    sites = hex_sites(500.0)
    d = np.round(np.linalg.norm(sites, axis=1), 6)
    assert len(sites) == 19
    assert d[0] == 0
    assert np.all(d[1:7] == 500.0)
    assert sorted(set(d[7:])) == [round(500 * math.sqrt(3), 6), 1000.0]


def test_single_cell_geometry():
    sc = build_single_cell(80)
    assert sc.num_users == 80
    assert len(sc.stations) == 19
    assert sc.serving == (0,)
    assert len(sc.interfering) == 18
    dist = np.linalg.norm(sc.users, axis=1)
    assert np.all(np.diff(dist) > 0)
    assert dist.max() < 500 / math.sqrt(3)
    # every user lies on the 30 degree axis
    assert np.allclose(np.arctan2(sc.users[:, 1], sc.users[:, 0]), math.radians(30))


def test_single_user_sits_at_midpoint():
    sc = build_single_cell(1, cell_radius=300.0)
    assert np.linalg.norm(sc.users[0]) == pytest.approx(150.0)


def test_single_cell_rejects_bad_args():
    with pytest.raises(ValueError):
        build_single_cell(10, cell_radius=0.0)
    with pytest.raises(ValueError):
        build_single_cell(0)


def test_sfn_geometry():
    sc = build_sfn(1700)
    assert sc.num_users == 1700
    assert len(sc.serving) == 4 and len(sc.interfering) == 15
    # 42 x 42 grid truncated row-major: 40 full rows plus 20 points
    assert sc.user_labels["grid_col"].max() == 41
    assert sc.user_labels["grid_row"].max() == 40
    assert np.count_nonzero(sc.user_labels["grid_row"] == 40) == 20
    small = build_sfn(4)
    assert sorted(zip(small.user_labels["grid_row"], small.user_labels["grid_col"])) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    with pytest.raises(ValueError):
        build_sfn(0)


def _isolated(scenario, noise_dbm):
    # keep only the serving stations
    keep = list(scenario.serving)
    return replace(scenario, stations=scenario.stations[keep], tx_power_dbm=scenario.tx_power_dbm[keep],
                   serving=tuple(range(len(keep))), radio=replace(scenario.radio, noise_power_dbm=noise_dbm))


def test_snr_without_interferers():
    sc = _isolated(build_single_cell(3, cell_radius=300.0), -100.0)
    d_km = np.linalg.norm(sc.users, axis=1) / 1000
    rx_dbm = 46.0 - (128.1 + 37.6 * np.log10(d_km))
    assert np.allclose(10 * np.log10(sinr_all(sc)), rx_dbm + 100.0)
    assert sinr(sc, 1) == pytest.approx(10 ** ((rx_dbm[1] + 100.0) / 10))


def test_power_scaling_cancels_without_noise():
    sc = build_single_cell(20)
    sc = replace(sc, radio=replace(sc.radio, noise_power_dbm=-np.inf))
    louder = replace(sc, tx_power_dbm=sc.tx_power_dbm + 3.0103)
    assert np.allclose(sinr_all(sc), sinr_all(louder))


def test_sfn_useful_power_is_sum_over_serving_sites():
    sc = _isolated(replace(build_sfn(1), users=np.array([[250.0, 144.33756729740642]])), -100.0)
    d = np.linalg.norm(sc.stations - sc.users[0], axis=1)
    one = replace(sc, stations=sc.stations[:1], tx_power_dbm=sc.tx_power_dbm[:1], serving=(0,))
    # equal transmit powers: each site contributes (d0 / d)^B relative to site 0
    gains = (d[0] / d) ** 3.76
    assert sinr_all(sc)[0] / sinr_all(one)[0] == pytest.approx(gains.sum(), rel=1e-9)


def test_sfn_equidistant_power_is_four_times_single():
    sc = build_sfn(1)
    ring = np.array([[100.0, 0.0], [-100.0, 0.0], [0.0, 100.0], [0.0, -100.0]])
    sfn4 = replace(sc, stations=ring, tx_power_dbm=np.full(4, 46.0), serving=(0, 1, 2, 3),
                   users=np.zeros((1, 2)), radio=replace(sc.radio, noise_power_dbm=-100.0))
    single = replace(sfn4, stations=ring[:1], tx_power_dbm=np.full(1, 46.0), serving=(0,))
    assert sinr_all(sfn4)[0] == pytest.approx(4 * sinr_all(single)[0])


def test_distance_clamped_to_one_metre():
    sc = build_sfn(1)
    on_top = replace(sc, users=np.array([[0.0, 0.0]]))
    near = replace(sc, users=np.array([[0.5, 0.0]]))
    assert np.isfinite(sinr_all(on_top)[0])
    assert sinr_all(on_top)[0] == pytest.approx(sinr_all(near)[0], rel=1e-3)


def test_erasure_sigmoid_points():
    table = McsTable.default()
    th, w = table.thresholds_db[4], table.widths_db[4]
    p = erasure_from_sinr(np.array([th + 10 * w, th, th - 10 * w]), table)[:, 4]
    assert p[0] <= 0.01
    assert p[1] == pytest.approx(0.5)
    assert p[2] >= 0.99


def test_profile_rows_monotone_and_distance_monotone():
    sc = build_single_cell(80)
    prof = erasure_profile(sc)
    assert prof.p.shape == (80, 15)
    assert np.all(np.diff(prof.p, axis=1) >= 0)
    assert np.all(np.diff(prof.p, axis=0) >= 0)  # users ordered by distance from the server


def test_sfn_profile_rows_monotone():
    prof = erasure_profile(build_sfn(400))
    assert np.all(np.diff(prof.p, axis=1) >= 0)


def test_mixed_widths_still_monotone():
    table = McsTable.from_records([
        {"name": "a", "sinr_threshold_db": 0.0, "transition_width_db": 5.0},
        {"name": "b", "sinr_threshold_db": 1.0, "transition_width_db": 0.2},
    ])
    p = erasure_from_sinr(np.linspace(-20, 20, 81), table)
    assert np.all(p[:, 1] >= p[:, 0])


def test_mcs_table_validation():
    with pytest.raises(ValueError):
        McsTable.from_records([
            {"name": "a", "sinr_threshold_db": 2.0, "transition_width_db": 1.0},
            {"name": "b", "sinr_threshold_db": 1.0, "transition_width_db": 1.0},
        ])
    assert len(McsTable.default()) == 15


def test_erasure_profile_validation():
    with pytest.raises(ValueError):
        ErasureProfile(np.array([[0.5, 0.2]]))
    with pytest.raises(ValueError):
        ErasureProfile(np.array([[1.5]]))


def test_shadowing_is_seeded():
    radio = RadioParams(shadowing_std_db=6.0, shadowing_seed=4)
    a = sinr_all(build_single_cell(30, params=radio))
    b = sinr_all(build_single_cell(30, params=radio))
    c = sinr_all(build_single_cell(30))
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_generation_is_deterministic():
    assert np.array_equal(erasure_profile(build_sfn(100)).p, erasure_profile(build_sfn(100)).p)


def test_scenario_exports_json_friendly_dict():
    import json
    d = build_single_cell(3).to_dict()
    assert json.loads(json.dumps(d))["serving"] == [0]
