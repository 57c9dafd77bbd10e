import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from odlamc.mcs_model import (
    CqiTable,
    McsTable,
    base_mcs_of_cqi,
    bler,
    cqi_from_sinr,
    oracle_mcs,
    se_of,
    success_probabilities,
)

TABLE = McsTable()
CQI = CqiTable(n=15, floor_db=-8.0, step_db=2.0)


def test_default_table_shape():
    assert TABLE.k == 28
    assert np.all(np.diff(TABLE.se_array) > 0)
    assert np.all(np.diff(TABLE.threshold_array) > 0)
    assert TABLE.thresholds[0] == -6.5
    assert TABLE.thresholds[-1] == pytest.approx(-6.5 + 0.75 * 27)


def test_se_lookup():
    assert se_of(TABLE, 1) == 0.2344
    assert se_of(TABLE, 28) == 5.5547
    assert se_of(TABLE, 3) < se_of(TABLE, 4)


@pytest.mark.parametrize("mcs", [0, 29, -1])
def test_se_out_of_range(mcs):
    with pytest.raises(IndexError):
        se_of(TABLE, mcs)


@pytest.mark.parametrize("kwargs", [
    dict(se=(1.0,), thresholds=(0.0,)),
    dict(se=(1.0, 1.0), thresholds=(0.0, 1.0)),
    dict(se=(1.0, 2.0), thresholds=(1.0, 0.0)),
    dict(se=(1.0, 2.0), thresholds=(0.0, 1.0), slope=0.0),
    dict(se=(1.0, 2.0), thresholds=(0.0, 1.0, 2.0)),
])
def test_invalid_tables(kwargs):
    with pytest.raises(ValueError):
        McsTable(**kwargs)


def test_bler_values():
    for m in (1, 10, 28):
        assert bler(TABLE, m, TABLE.thresholds[m - 1]) == pytest.approx(0.5)
    assert bler(TABLE, 5, TABLE.thresholds[4] + 1.0) == pytest.approx(1.0 / (1.0 + math.e ** 2), rel=1e-12)
    assert bler(TABLE, 5, TABLE.thresholds[4] + 1.0) == pytest.approx(0.11920, abs=5e-6)
    assert bler(TABLE, 28, 1e6) == 0.0


def test_bler_vectorised_matches_scalar():
    grid = np.linspace(-20, 30, 101)
    for m in (1, 14, 28):
        vec = bler(TABLE, m, grid)
        assert np.allclose(vec, [bler(TABLE, m, g) for g in grid], rtol=1e-13, atol=0)
    assert np.allclose(1.0 - success_probabilities(TABLE, 3.3),
                       [bler(TABLE, m, 3.3) for m in range(1, 29)], atol=1e-15)


def test_bler_monotone_on_grid():
    grid = np.linspace(-20, 25, 451)
    B = np.array([bler(TABLE, m, grid) for m in range(1, 29)])
    assert np.all((B >= 0) & (B <= 1))
    assert np.all(np.diff(B, axis=1) <= 0)  # decreasing in SINR
    assert np.all(np.diff(B, axis=0) >= 0)  # increasing in MCS
    # strict wherever float64 has not saturated
    live = (B[:, :-1] > 1e-12) & (B[:, :-1] < 1 - 1e-12) & (B[:, 1:] > 1e-12) & (B[:, 1:] < 1 - 1e-12)
    assert np.all(np.diff(B, axis=1)[live] < 0)


def test_oracle_limits():
    assert oracle_mcs(TABLE, -100.0) == 1
    assert oracle_mcs(TABLE, 100.0) == 28


def test_oracle_brute_force_at_5db():
    # exhaustive product evaluation with the closed-form BLER
    products = [se * (1.0 - 1.0 / (1.0 + math.exp(2.0 * (5.0 - (-6.5 + 0.75 * m)))))
                for m, se in enumerate(TABLE.se)]
    expected = products.index(max(products)) + 1
    assert expected == 15
    assert oracle_mcs(TABLE, 5.0) == expected


def test_oracle_tie_breaks_to_smallest():
    table = McsTable(se=(1.0, 2.0, 4.0), thresholds=(0.0, 1.0, 2.0))
    # products all zero at -1e4 dB
    assert oracle_mcs(table, -1e4) == 1


def test_oracle_monotone_in_sinr():
    choices = [oracle_mcs(TABLE, s) for s in np.linspace(-30, 40, 2001)]
    assert all(a <= b for a, b in zip(choices, choices[1:]))
    assert choices[0] == 1 and choices[-1] == 28


@pytest.mark.parametrize("sinr,expected", [(-8.0, 1), (0.0, 5), (40.0, 15), (-100.0, 1), (-6.0, 2), (-6.0001, 1)])
def test_cqi_from_sinr(sinr, expected):
    assert cqi_from_sinr(CQI, sinr) == expected


def test_cqi_monotone_and_surjective():
    grid = np.linspace(-30, 50, 4001)
    cqis = [cqi_from_sinr(CQI, s) for s in grid]
    assert all(a <= b for a, b in zip(cqis, cqis[1:]))
    assert set(cqis) == set(range(1, 16))


@pytest.mark.parametrize("cqi,expected", [(1, 1.0), (15, 28.0), (8, 14.5)])
def test_base_mcs_of_cqi(cqi, expected):
    assert base_mcs_of_cqi(cqi, 28, 15) == expected


def test_base_mcs_rejects_bad_cqi():
    with pytest.raises(IndexError):
        base_mcs_of_cqi(0, 28, 15)


@given(st.floats(-15, 15), st.integers(1, 27))
def test_bler_property_open_interval_and_order(offset, m):
    sinr = TABLE.thresholds[m - 1] + offset
    assert 0.0 < bler(TABLE, m, sinr) < 1.0
    assert bler(TABLE, m, sinr) < bler(TABLE, m + 1, sinr)
