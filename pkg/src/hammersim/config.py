"""Experiment configuration: line-oriented ``section.key = value`` files.

Recognized keys (defaults in brackets)::

    geometry.banks [1]  geometry.rows_per_bank [8]  geometry.bits_per_row [64]
    geometry.spare_rows_per_bank [0]
    timing.tRC_ns [50]  timing.tRFC_row_ns [100]  timing.refresh_window_ms [64]
    fault.vulnerable_fraction [1e-5]  fault.threshold_min [50000]
    fault.threshold_max [200000]  fault.orientation [all-true]
    device.fill [ones]  device.adjacency [identity]  device.ecc [off]
    mitigation [none]   comma- or plus-separated subset of refreshx,para,counters,retire
    refreshx.k [1]  para.p [0.001]  para.both_neighbors [false]
    counters.threshold [threshold_min / 2]  counters.scope [victim]
    retire.rows [auto]  comma list of ``row`` or ``bank:row``, or ``auto``
    workload.kind [single_sided]  workload.bank [0]  workload.row [1]
    workload.n [0]  (an integer or ``max`` = one refresh window of ACTs)
    workload.op [read]  workload.write_fraction [0.5]  workload.path
    run.seed [0]  run.trials [1]  run.out  run.flip_log
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .analytics import max_activations_per_window
from .commands import RowAddress
from .dram import Geometry, TimingParams
from .errors import ConfigError
from .faults import FaultModelParams
from .mitigation import MitigationConfig, NAMES as MITIGATION_NAMES
from .workloads import WorkloadSpec

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _bool(v: str) -> bool:
    v = v.lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _count(v: str):
    return v if v == "max" else int(v)


KEYS = {
    "geometry.banks": int,
    "geometry.rows_per_bank": int,
    "geometry.bits_per_row": int,
    "geometry.spare_rows_per_bank": int,
    "timing.tRC_ns": int,
    "timing.tRFC_row_ns": int,
    "timing.refresh_window_ms": float,
    "fault.vulnerable_fraction": float,
    "fault.threshold_min": int,
    "fault.threshold_max": int,
    "fault.orientation": str,
    "device.fill": str,
    "device.adjacency": str,
    "device.ecc": _bool,
    "mitigation": str,
    "refreshx.k": int,
    "para.p": float,
    "para.both_neighbors": _bool,
    "counters.threshold": int,
    "counters.scope": str,
    "retire.rows": str,
    "workload.kind": str,
    "workload.bank": int,
    "workload.row": int,
    "workload.n": _count,
    "workload.op": str,
    "workload.write_fraction": float,
    "workload.path": str,
    "run.seed": int,
    "run.trials": int,
    "run.out": str,
    "run.flip_log": str,
}


def parse_config_text(text: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}", "expected 'section.key = value'")
        raw[key] = value.strip()
    return raw


def _typed(raw: dict[str, str]) -> dict:
    out = {}
    for key, value in raw.items():
        conv = KEYS.get(key)
        if conv is None:
            raise ConfigError(key, "unknown config key")
        try:
            out[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(key, f"bad value {value!r} ({exc})") from None
    return out


def _parse_rows(spec: str, key: str) -> tuple[RowAddress, ...] | str:
    spec = spec.strip()
    if spec == "auto":
        return "auto"
    rows = []
    for tok in filter(None, (t.strip() for t in spec.split(","))):
        try:
            if ":" in tok:
                b, r = tok.split(":")
                rows.append(RowAddress(int(b), int(r)))
            else:
                rows.append(RowAddress(0, int(tok)))
        except ValueError:
            raise ConfigError(key, f"bad row {tok!r}") from None
    return tuple(rows)


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: Geometry = Geometry()
    timing: TimingParams = TimingParams()
    fault: FaultModelParams = FaultModelParams()
    mitigation: MitigationConfig = MitigationConfig()
    workload: WorkloadSpec = WorkloadSpec()
    seed: int = 0
    trials: int = 1
    fill: str = "ones"
    adjacency: str = "identity"
    ecc: bool = False
    retire_auto: bool = False
    out: str | None = None
    flip_log: str | None = None
    raw: tuple = ()

    @classmethod
    def from_mapping(cls, raw: dict[str, str]) -> ExperimentConfig:
        v = _typed(raw)
        geometry = Geometry(
            banks=v.get("geometry.banks", 1),
            rows_per_bank=v.get("geometry.rows_per_bank", 8),
            bits_per_row=v.get("geometry.bits_per_row", 64),
            spare_rows_per_bank=v.get("geometry.spare_rows_per_bank", 0),
        )
        timing = TimingParams(
            tRC_ns=v.get("timing.tRC_ns", 50),
            tRFC_row_ns=v.get("timing.tRFC_row_ns", 100),
            refresh_window_ms=v.get("timing.refresh_window_ms", 64.0),
        )
        fault = FaultModelParams(
            vulnerable_fraction=v.get("fault.vulnerable_fraction", 1e-5),
            threshold_min=v.get("fault.threshold_min", 50_000),
            threshold_max=v.get("fault.threshold_max", 200_000),
            orientation=v.get("fault.orientation", "all-true"),
        )

        names = [n.strip() for n in v.get("mitigation", "none").replace("+", ",").split(",")]
        names = [n for n in names if n and n != "none"]
        for n in names:
            if n not in MITIGATION_NAMES:
                raise ConfigError("mitigation", f"unknown mitigation {n!r}")
        retire = None
        retire_auto = False
        if "retire" in names:
            rows = _parse_rows(raw.get("retire.rows", "auto"), "retire.rows")
            if rows == "auto":
                retire_auto, retire = True, ()
            else:
                retire = rows
        mitigation = MitigationConfig(
            refresh_k=v.get("refreshx.k", 1) if "refreshx" in names else None,
            para_p=v.get("para.p", 0.001) if "para" in names else None,
            para_both=v.get("para.both_neighbors", False),
            counter_threshold=(v.get("counters.threshold", max(1, fault.threshold_min // 2))
                               if "counters" in names else None),
            counter_scope=v.get("counters.scope", "victim"),
            retire_rows=retire,
        )

        kind = v.get("workload.kind", "single_sided")
        n = v.get("workload.n", 0)
        if n == "max":
            n = max_activations_per_window(timing.refresh_window_ms, timing.tRC_ns, 1)
            if kind == "double_sided":
                n //= 2
        workload = WorkloadSpec(
            kind=kind,
            bank=v.get("workload.bank", 0),
            row=v.get("workload.row", 1),
            n=n,
            op=v.get("workload.op", "read"),
            write_fraction=v.get("workload.write_fraction", 0.5),
            path=v.get("workload.path"),
        )
        trials = v.get("run.trials", 1)
        if trials < 1:
            raise ConfigError("run.trials", "must be >= 1")
        return cls(
            geometry=geometry, timing=timing, fault=fault, mitigation=mitigation,
            workload=workload, seed=v.get("run.seed", 0), trials=trials,
            fill=v.get("device.fill", "ones"), adjacency=v.get("device.adjacency", "identity"),
            ecc=v.get("device.ecc", False), retire_auto=retire_auto,
            out=v.get("run.out"), flip_log=v.get("run.flip_log"),
            raw=tuple(raw.items()),
        )

    @classmethod
    def from_text(cls, text: str) -> ExperimentConfig:
        return cls.from_mapping(parse_config_text(text))

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        with open(path) as fh:
            return cls.from_text(fh.read())

    def with_overrides(self, overrides: dict[str, object]) -> ExperimentConfig:
        """Re-parse with some keys replaced (values are stringified first)."""
        raw = dict(self.raw)
        for k, val in overrides.items():
            raw[k] = str(val)
        return ExperimentConfig.from_mapping(raw)

    def with_seed(self, seed: int) -> ExperimentConfig:
        raw = dict(self.raw)
        raw["run.seed"] = str(seed)
        return replace(self, seed=seed, raw=tuple(raw.items()))
