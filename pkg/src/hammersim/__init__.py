"""hammersim: discrete-time DRAM disturbance-error (RowHammer) simulator."""
from .commands import Act, Nop, Pre, Rd, RefRow, RowAddress, Wr
from .config import ExperimentConfig
from .controller import CommandResult, Controller
from .dram import (AdjacencyMap, DramDevice, Geometry, TimingParams, build_device,
                   export_adjacency, import_adjacency, read_spd, write_spd)
from .faults import CellProfile, FaultModelParams, Flip, sample_profiles
from .harness import run_experiment, run_trials, sweep
from .mitigation import MitigationConfig, retire_rows
from .report import RunReport, emit_csv, format_csv, read_csv
from .workloads import (AccessTrace, WorkloadSpec, gen_double_sided, gen_single_sided,
                        gen_uniform_random, read_trace, write_trace)

__version__ = "0.1.0"
