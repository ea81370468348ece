"""Acceptance criteria, one test each, at their stated tolerances.

Each test prints a single ``PASS``/``FAIL`` line to the terminal. Run alone with::

    pytest tests/test_acceptance.py -v
"""
import math
import random
import time

import pytest

from hammersim import (CellProfile, Controller, ExperimentConfig, FaultModelParams, Geometry,
                       MitigationConfig, RowAddress, TimingParams, build_device, export_adjacency,
                       format_csv, gen_double_sided, gen_single_sided, import_adjacency,
                       run_experiment, read_spd, read_trace, write_spd, write_trace)
from hammersim.analytics import max_activations_per_window, para_survival_prob
from hammersim.ecc import UNCORRECTABLE, Outcome, decode, encode
from hammersim.mitigation import para_survival_trials
from hammersim.workloads import gen_uniform_random

from oracle import flip_tuples, locality_violations, random_trace, replay, snapshot


@pytest.fixture
def verdict(capsys):
    def emit(n, title, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {title}: {detail}")
        assert ok, detail
    return emit


# shared fuzz device: small, densely vulnerable, quick refresh window
FUZZ_GEOMETRY = Geometry(1, 8, 64, 0)
FUZZ_TIMING = TimingParams(tRC_ns=50, tRFC_row_ns=100, refresh_window_ms=0.01)
FUZZ_FAULT = FaultModelParams(vulnerable_fraction=0.05, threshold_min=15, threshold_max=40)
FUZZ_TRACES = 1000
FUZZ_ACTS = 300


def fuzz_device(seed, fill="ones"):
    return build_device(FUZZ_GEOMETRY, FUZZ_TIMING, FUZZ_FAULT, seed, fill=fill)


def test_1_ecc_exhaustive(verdict):
    start = time.perf_counter()
    rng = random.Random(2024)
    bad = 0
    for _ in range(256):
        d = rng.getrandbits(64)
        cw = encode(d)
        for i in range(72):
            data, status = decode(cw ^ (1 << i))
            if data != d or status.outcome is not Outcome.CORRECTED or status.position != i:
                bad += 1
            for j in range(i + 1, 72):
                if decode(cw ^ (1 << i) ^ (1 << j))[1] is not UNCORRECTABLE:
                    bad += 1
    elapsed = time.perf_counter() - start
    verdict(1, "ECC exhaustive correctness", bad == 0 and elapsed < 5.0,
            f"256 words x (72 single + 2556 double) corruptions, {bad} wrong, {elapsed:.2f}s (limit 5s)")


def test_2_para_analytic_agreement(verdict):
    p, n, trials = 0.001, 10_000, 100_000
    start = time.perf_counter()
    freq = para_survival_trials(p, n, trials, seed=1).mean()
    elapsed = time.perf_counter() - start
    closed = para_survival_prob(p, n)
    ok = elapsed < 120.0
    parts = []
    for label, ref in (("closed form", closed), ("reference 0.006721", 0.006721)):
        sigma = math.sqrt(ref * (1 - ref) / trials)
        z = abs(freq - ref) / sigma
        ok = ok and z <= 3.0
        parts.append(f"{label} {ref:.7f} at {z:.2f} sigma")
    verdict(2, "PARA analytic agreement", ok,
            f"survival {freq:.6f} over {trials} trials; " + "; ".join(parts) + f"; {elapsed:.1f}s (limit 120s)")


def _boundary_flips(k):
    timing = TimingParams(tRC_ns=50, tRFC_row_ns=100, refresh_window_ms=64.0)
    fault = FaultModelParams(vulnerable_fraction=1.0, threshold_min=183_000, threshold_max=183_000)
    dev = build_device(Geometry(1, 8, 64, 0), timing, fault, seed=0)
    n = max_activations_per_window(64.0, 50)
    ctrl = Controller(dev, timing, MitigationConfig(refresh_k=k))
    return ctrl.run(gen_single_sided(RowAddress(0, 3), n).commands).flips


def test_3_refresh_multiplier_boundary(verdict):
    start = time.perf_counter()
    f6, f7 = _boundary_flips(6), _boundary_flips(7)
    elapsed = time.perf_counter() - start
    verdict(3, "refresh-multiplier boundary", f6 >= 1 and f7 == 0 and elapsed < 60.0,
            f"k=6 {f6} flips, k=7 {f7} flips, {elapsed:.1f}s (limit 60s)")


def test_4_counter_soundness(verdict):
    threshold = FUZZ_FAULT.threshold_min - 1
    guarded_flips = 0
    unguarded_runs_flipping = 0
    mismatches = 0
    for i in range(FUZZ_TRACES):
        rng = random.Random(i)
        cmds = random_trace(rng, FUZZ_GEOMETRY, FUZZ_ACTS)
        for mitigation in (MitigationConfig(counter_threshold=threshold), MitigationConfig()):
            dev = fuzz_device(i)
            snap = snapshot(dev)
            ctrl = Controller(dev, FUZZ_TIMING, mitigation, seed=i, record_events=True)
            report = ctrl.run(cmds)
            if replay(snap, ctrl.events) != flip_tuples(report):
                mismatches += 1
            if mitigation.counter_threshold is not None:
                guarded_flips += report.flips
            elif report.flips:
                unguarded_runs_flipping += 1
    ok = guarded_flips == 0 and unguarded_runs_flipping >= 1 and mismatches == 0
    verdict(4, "counter mitigation soundness", ok,
            f"{FUZZ_TRACES} traces; counters at {threshold}: {guarded_flips} flips; "
            f"no mitigation: {unguarded_runs_flipping} runs flipped; oracle mismatches {mismatches}")


def test_5_locality_fuzzing(verdict):
    violations = 0
    variant_mismatch = 0
    total_flips = 0
    variant_flips = 0
    even_rows = [r for r in range(FUZZ_GEOMETRY.rows_per_bank) if r % 2 == 0]
    for i in range(FUZZ_TRACES):
        cmds = random_trace(random.Random(i), FUZZ_GEOMETRY, FUZZ_ACTS)
        dev = fuzz_device(i)
        snap = snapshot(dev)
        ctrl = Controller(dev, FUZZ_TIMING, seed=i, record_events=True)
        report = ctrl.run(cmds)
        violations += len(locality_violations(snap, ctrl.events, report))
        total_flips += report.flips

        # read-only vs write variant: same aggressors, writes re-store the aggressor's own contents
        flips = []
        for op in ("read", "write"):
            dev = fuzz_device(i, fill="checkerboard")
            cmds = random_trace(random.Random(10_000 + i), FUZZ_GEOMETRY, FUZZ_ACTS,
                                aggressors=even_rows, op=op,
                                write_data=lambda addr, w, dev=dev: dev.fill_data(addr))
            flips.append(flip_tuples(Controller(dev, FUZZ_TIMING, seed=i).run(cmds)))
        if flips[0] != flips[1]:
            variant_mismatch += 1
        variant_flips += len(flips[0])
    ok = violations == 0 and variant_mismatch == 0 and total_flips > 0 and variant_flips > 0
    verdict(5, "locality fuzzing", ok,
            f"{FUZZ_TRACES} traces, {total_flips} flips checked, {violations} locality violations, "
            f"{variant_mismatch} read/write variant mismatches over {variant_flips} flips")


def _single_cell(K):
    dev = build_device(Geometry(1, 8, 64, 0), fault=FaultModelParams(vulnerable_fraction=0.0))
    dev.set_cell_profile(RowAddress(0, 4), 17, CellProfile(K, "true"))
    return dev


def test_6_double_sided_dominance(verdict):
    K = 10_000
    victim = RowAddress(0, 4)
    got = {}
    for label, make in (
        ("double 5000", lambda d: gen_double_sided(d, victim, 5000)),
        ("double 4999", lambda d: gen_double_sided(d, victim, 4999)),
        ("single 10000", lambda d: gen_single_sided(RowAddress(0, 3), 10_000)),
        ("single 9999", lambda d: gen_single_sided(RowAddress(0, 3), 9999)),
    ):
        dev = _single_cell(K)
        got[label] = Controller(dev).run(make(dev).commands).flips
    expect = {"double 5000": 1, "double 4999": 0, "single 10000": 1, "single 9999": 0}
    verdict(6, "double-sided dominance", got == expect,
            ", ".join(f"{k} per aggressor -> {v} flip(s)" for k, v in got.items()) + f" (K={K})")


def test_7_determinism(verdict, tmp_path):
    text = ("geometry.rows_per_bank = 16\ngeometry.bits_per_row = 128\n"
            "timing.refresh_window_ms = 0.5\nfault.vulnerable_fraction = 0.05\n"
            "fault.threshold_min = 100\nfault.threshold_max = 300\n"
            "device.adjacency = permuted\nmitigation = para\npara.p = 0.05\n"
            "workload.kind = uniform_random\nworkload.n = 5000\nrun.seed = 77\n")
    config = ExperimentConfig.from_text(text)
    csv_same = format_csv([run_experiment(config)]) == format_csv([run_experiment(config)])

    dev = build_device(Geometry(2, 64, 64, 0), seed=5, adjacency="permuted")
    write_spd(dev, tmp_path / "a.spd")
    write_spd(read_spd(tmp_path / "a.spd"), tmp_path / "b.spd")
    spd_same = ((tmp_path / "a.spd").read_bytes() == (tmp_path / "b.spd").read_bytes()
                and import_adjacency(export_adjacency(dev)) == dev.adjacency)

    trace = gen_uniform_random(Geometry(2, 64, 128, 0), 5, 2000)
    write_trace(trace, tmp_path / "a.trace")
    back = read_trace(tmp_path / "a.trace")
    write_trace(back, tmp_path / "b.trace")
    trace_same = ((tmp_path / "a.trace").read_bytes() == (tmp_path / "b.trace").read_bytes()
                  and back.commands == trace.commands)

    verdict(7, "determinism", csv_same and spd_same and trace_same,
            f"CSV identical {csv_same}, SPD round trip {spd_same}, trace round trip {trace_same}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
