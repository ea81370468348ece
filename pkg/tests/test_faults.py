import math

import pytest
from hypothesis import given, settings, strategies as st

from hammersim import (CellProfile, Controller, FaultModelParams, Geometry, RowAddress,
                       TimingParams, build_device, gen_double_sided, gen_single_sided,
                       sample_profiles)
from hammersim.errors import ConfigError
from hammersim.faults import read_flip_log, write_flip_log

ONES = (1 << 64) - 1
NO_FAULTS = FaultModelParams(vulnerable_fraction=0.0)


def bare(rows=8, fill="ones", timing=TimingParams()):
    return build_device(Geometry(1, rows, 64, 0), timing, NO_FAULTS, fill=fill)


def hammer(dev, row, n):
    dev_addr = RowAddress(0, row)
    for _ in range(n):
        dev.faults.record_aggressor_activation(dev, dev_addr)


@pytest.mark.parametrize("kwargs, key", [
    (dict(vulnerable_fraction=1.5), "fault.vulnerable_fraction"),
    (dict(threshold_min=0), "fault.threshold_min"),
    (dict(threshold_min=10, threshold_max=5), "fault.threshold_max"),
    (dict(orientation="sideways"), "fault.orientation"),
])
def test_params_rejected(kwargs, key):
    with pytest.raises(ConfigError) as exc:
        FaultModelParams(**kwargs)
    assert exc.value.key == key


def test_fraction_zero_all_invulnerable():
    t = sample_profiles(Geometry(2, 16, 64, 0), FaultModelParams(0.0), seed=1)
    assert t.vulnerable_count() == 0


def test_fraction_one_point_interval():
    t = sample_profiles(Geometry(1, 4, 64, 0), FaultModelParams(1.0, 5, 5), seed=1)
    assert t.vulnerable_count() == 4 * 64
    assert all(th == 5 for row in t.cells for th, _, _ in row)


def test_vulnerable_count_is_binomial():
    p = 0.01
    g = Geometry(1, 1024, 1024, 0)  # about 10^6 cells
    n = g.banks * g.rows_per_bank * g.bits_per_row
    t = sample_profiles(g, FaultModelParams(p, 100, 200), seed=42)
    sigma = math.sqrt(n * p * (1 - p))
    assert abs(t.vulnerable_count() - n * p) <= 3 * sigma


def test_thresholds_in_range():
    t = sample_profiles(Geometry(1, 64, 256, 0), FaultModelParams(0.1, 30, 40), seed=3)
    ths = [th for row in t.cells for th, _, _ in row]
    assert ths and min(ths) >= 30 and max(ths) <= 40
    assert set(ths) == set(range(30, 41))


def test_alternating_orientation():
    t = sample_profiles(Geometry(1, 4, 64, 0), FaultModelParams(1.0, 5, 5, "alternate-by-physical-row"), 0)
    assert [t.profile(p, 0).orientation for p in range(4)] == ["true", "anti", "true", "anti"]


# exposure bookkeeping

def test_activation_adds_to_both_neighbors():
    dev = bare()
    hammer(dev, 5, 1)
    assert dev.exposure(RowAddress(0, 4)) == 1
    assert dev.exposure(RowAddress(0, 6)) == 1
    assert dev.exposure(RowAddress(0, 5)) == 0


def test_edge_row_has_one_neighbor():
    dev = bare()
    hammer(dev, 0, 1)
    assert [dev.exposure(RowAddress(0, r)) for r in range(8)] == [0, 1, 0, 0, 0, 0, 0, 0]


@pytest.mark.parametrize("n", [1, 7, 50])
def test_double_sided_contributions_add(n):
    dev = bare()
    for _ in range(n):
        hammer(dev, 3, 1)
        hammer(dev, 5, 1)
    assert dev.exposure(RowAddress(0, 4)) == 2 * n


def _victim(threshold, orientation="true", fill="ones"):
    dev = bare(fill=fill)
    dev.set_cell_profile(RowAddress(0, 4), 0, CellProfile(threshold, orientation))
    return dev


def test_below_threshold_no_flip():
    dev = _victim(10)
    hammer(dev, 3, 9)
    assert dev.read_data(RowAddress(0, 4), 0) == ONES


def test_flip_exactly_at_threshold():
    dev = _victim(10)
    flips = []
    for i in range(15):
        flips += dev.faults.record_aggressor_activation(dev, RowAddress(0, 3), i)
    assert len(flips) == 1
    f = flips[0]
    assert (f.time_ns, f.bank, f.row, f.bit, f.old, f.new) == (9, 0, 4, 0, 1, 0)
    assert dev.read_data(RowAddress(0, 4), 0) == ONES ^ 1


def test_discharged_cell_never_flips():
    dev = _victim(10, fill="zeros")
    hammer(dev, 3, 100)
    assert dev.read_data(RowAddress(0, 4), 0) == 0


def test_anti_cell_loses_zero():
    dev = _victim(10, orientation="anti", fill="zeros")
    hammer(dev, 3, 10)
    assert dev.read_data(RowAddress(0, 4), 0) == 1


def test_refresh_does_not_repair():
    dev = _victim(10)
    hammer(dev, 3, 10)
    dev.refresh(RowAddress(0, 4))
    assert dev.exposure(RowAddress(0, 4)) == 0
    assert dev.read_data(RowAddress(0, 4), 0) == ONES ^ 1


def test_at_most_one_flip_per_epoch_then_again_after_refresh():
    dev = _victim(10)
    v = RowAddress(0, 4)
    hammer(dev, 3, 10)
    dev.write_data(v, 0, ONES)
    hammer(dev, 3, 5)
    assert dev.read_data(v, 0) == ONES   # already flipped this epoch
    dev.refresh(v)
    hammer(dev, 3, 10)
    assert dev.read_data(v, 0) == ONES ^ 1


def test_crossed_discharged_cell_flips_once_recharged():
    dev = _victim(10, fill="zeros")
    v = RowAddress(0, 4)
    hammer(dev, 3, 12)
    dev.write_data(v, 0, ONES)
    flips = dev.faults.record_aggressor_activation(dev, RowAddress(0, 3), 99)
    assert len(flips) == 1 and flips[0].time_ns == 99
    assert dev.read_data(v, 0) == ONES ^ 1


def test_infinite_thresholds_never_flip():
    dev = bare()
    hammer(dev, 3, 100_000)
    assert all(words == [ONES] for words in dev.storage)


@pytest.mark.parametrize("K", [1, 2, 9, 10, 101])
def test_double_sided_needs_half_per_side(K):
    need = math.ceil(K / 2)
    for n, expect in ((need - 1, 0), (need, 1)):
        dev = _victim(K)
        ctrl = Controller(dev)
        ctrl.run(gen_double_sided(dev, RowAddress(0, 4), n).commands)
        assert ctrl.report.flips == expect, (K, n)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 300), st.integers(0, 300))
def test_flip_set_monotone_in_hammer_count(seed, n, extra):
    f = FaultModelParams(0.2, 5, 250)

    def flips(count):
        dev = build_device(Geometry(1, 8, 64, 0), TimingParams(), f, seed)
        ctrl = Controller(dev)
        ctrl.run(gen_single_sided(RowAddress(0, 3), count).commands)
        return {(fl.row, fl.bit) for fl in ctrl.report.flip_log}

    assert flips(n) <= flips(n + extra)


def test_flip_log_round_trip(tmp_path):
    dev = build_device(Geometry(1, 8, 64, 0), fault=FaultModelParams(0.5, 3, 8), seed=2)
    ctrl = Controller(dev)
    ctrl.run(gen_single_sided(RowAddress(0, 3), 20).commands)
    assert ctrl.report.flip_log
    path = tmp_path / "flips.csv"
    write_flip_log(ctrl.report.flip_log, path)
    assert read_flip_log(path) == ctrl.report.flip_log
