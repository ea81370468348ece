"""Experiment runner: build, replay, report."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor

from .config import KEYS, ExperimentConfig
from .controller import Controller
from .dram import build_device
from .ecc import scrub_with_ecc
from .errors import ConfigError
from .mitigation import retire_rows
from .report import RunReport
from .seeding import trial_seed
from .workloads import generate

log = logging.getLogger(__name__)


def prepare(config: ExperimentConfig, record_events: bool = False):
    """Build the device, apply retirement and generate the trace for ``config``."""
    device = build_device(config.geometry, config.timing, config.fault, config.seed,
                          fill=config.fill, adjacency=config.adjacency, ecc_on=config.ecc)
    m = config.mitigation
    if m.retire_rows is not None:
        rows = device.vulnerable_rows() if config.retire_auto else m.retire_rows
        retire_rows(device, rows)
    trace = generate(config.workload, device, config.seed)
    ctrl = Controller(device, config.timing, m, seed=config.seed, record_events=record_events)
    return device, ctrl, trace


def run_experiment(config: ExperimentConfig, record_events: bool = False) -> RunReport:
    device, ctrl, trace = prepare(config, record_events)
    report = ctrl.run(trace.commands)
    if device.ecc:
        scrub_with_ecc(device, report)
    report.workload = config.workload.kind
    return report


def _threads() -> int:
    env = os.environ.get("HAMMERSIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("HAMMERSIM_THREADS", f"expected an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _run_many(configs: list[ExperimentConfig]) -> list[RunReport]:
    workers = min(_threads(), len(configs))
    if workers <= 1:
        return [run_experiment(c) for c in configs]
    log.info("running %d simulations on %d workers", len(configs), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves input order regardless of completion order
        return list(pool.map(run_experiment, configs))


def run_trials(config: ExperimentConfig) -> list[RunReport]:
    """``config.trials`` runs; a single trial uses the seed as is, trial i of many uses trial_seed(seed, i)."""
    if config.trials == 1:
        return [run_experiment(config)]
    return _run_many([config.with_seed(trial_seed(config.seed, i)) for i in range(config.trials)])


def sweep(config: ExperimentConfig, axis: str, values) -> list[RunReport]:
    """One run per value of ``axis``; run i uses seed ``config.seed + i``."""
    if KEYS.get(axis) not in (int, float):
        raise ConfigError(axis, "sweep axis must be a numeric config key")
    section = axis.split(".", 1)[0]
    if section in ("refreshx", "para", "counters") and section not in config.mitigation.active:
        raise ConfigError(axis, f"mitigation {section!r} is not enabled in this config")
    configs = [config.with_overrides({axis: v, "run.seed": config.seed + i})
               for i, v in enumerate(values)]
    return _run_many(configs)
