import json
import math

import numpy as np
import pytest

import thz_iqi


def test_version():
    assert thz_iqi.__version__ == "0.1.0"


def test_irr_round_trip():
    g = thz_iqi.amplitude_from_irr(30.0, 0.0)
    assert abs(g - 0.93869314) < 1e-7
    assert abs(thz_iqi.irr_db(g, 0.0) - 30.0) < 1e-9
    phi = math.radians(5.0)
    assert thz_iqi.closest_feasible_amplitude(30.0, phi) == 1.0
    with pytest.raises(ValueError):
        thz_iqi.amplitude_from_irr(30.0, phi)


def test_steering_vector_is_unit_norm():
    a = thz_iqi.steering_vector(4, 5e-4, 0.3, 1.4, 300e9)
    assert a.shape == (16,)
    assert abs(np.linalg.norm(a) - 1.0) < 1e-12


def test_flat_channel_minimum_bit_energy():
    hd = [np.ones((1, 1), dtype=complex)] * 4
    linear, db = thz_iqi.ebn0_min(hd)
    assert abs(linear - math.log(2.0)) < 1e-15
    assert abs(db + 1.59) < 0.01
    assert abs(thz_iqi.wideband_slope(hd) - 8.0) < 1e-12


def test_perfect_iq_reduces_to_concatenated_channel():
    rng = np.random.default_rng(0)
    hc = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4)]
    hd, hi = thz_iqi.effective_channels(hc, [(1.0, 0.0)] * 2, [(1.0, 0.0)] * 2)
    for a, b, c in zip(hc, hd, hi):
        assert np.array_equal(a, b)
        assert not c.any()
    mm = thz_iqi.mismatch_matrices([(0.9, 0.1)], [(0.8, -0.1)])
    assert np.allclose(mm["G2"], np.eye(1) - mm["G1"].conj())


def test_run_study_rows_match_csv(tmp_path):
    scenario = {
        "system": {"half_subcarriers": 2, "elements_per_side": 4},
        "study": {"trials": 2, "seed": 3, "snr_db": {"start": 0, "stop": 20, "step": 10}},
    }
    table = thz_iqi.run_study("rate-vs-snr", scenario)
    assert table["columns"][0] == "snr_db"
    assert len(table["rows"]) == 3
    assert table["csv"].startswith("# scenario=")
    path = thz_iqi.write_study("rate-vs-snr", json.dumps(scenario), str(tmp_path), True)
    with open(path) as f:
        assert f.read() == table["csv"]


def test_bad_scenario_raises_value_error():
    with pytest.raises(ValueError, match="iqi.g"):
        thz_iqi.run_study("nulling", {"iqi": {"g": -1}})
    with pytest.raises(ValueError):
        thz_iqi.run_study("not-a-study")


def test_oracle_check():
    report = thz_iqi.oracle_check(20, 5)
    assert report["instances"] == 20
    assert max(report["ebn0_min"], report["slope"]) < 0.01
