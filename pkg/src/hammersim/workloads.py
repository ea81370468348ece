"""Access-trace generators and the trace file format.

Trace file::

    trace v1
    # generator=single_sided
    ACT 0 3
    RD 0 3 0
    PRE 0
    WR 0 3 0 ffffffffffffffff
    REF 0 3
    NOP 100

Lines starting with ``# key=value`` carry metadata. Every line, including
the last, ends in a newline; a missing final newline means the file was cut.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .commands import Act, Nop, Pre, Rd, RefRow, RowAddress, Wr
from .errors import ConfigError, EdgeVictim, TraceFormatError
from .seeding import WORKLOAD_STREAM, stream

KINDS = ("single_sided", "double_sided", "uniform_random", "benign_sequential", "file")
OPS = ("read", "write")
ALL_ONES = (1 << 64) - 1


@dataclass
class AccessTrace:
    commands: list = field(default_factory=list)
    meta: dict[str, str] = field(default_factory=dict)

    def __len__(self):
        return len(self.commands)

    def activations(self) -> int:
        return sum(1 for c in self.commands if type(c) is Act)


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str = "single_sided"
    bank: int = 0
    row: int = 0
    n: int = 0
    op: str = "read"
    write_fraction: float = 0.5
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError("workload.kind", f"must be one of {', '.join(KINDS)}")
        if self.n < 0:
            raise ConfigError("workload.n", "must be >= 0")
        if self.op not in OPS:
            raise ConfigError("workload.op", "must be read or write")
        if not 0.0 <= self.write_fraction <= 1.0:
            raise ConfigError("workload.write_fraction", "must lie in [0, 1]")
        if self.kind == "file" and not self.path:
            raise ConfigError("workload.path", "required when workload.kind = file")


def _hammer_triple(addr: RowAddress, op: str, data: int, word: int = 0):
    access = Rd(addr, word) if op == "read" else Wr(addr, word, data)
    return [Act(addr), access, Pre(addr.bank)]


def gen_single_sided(aggressor: RowAddress, n: int, op: str = "read", data: int = ALL_ONES) -> AccessTrace:
    """``n`` repetitions of ACT, RD (or WR of ``data``), PRE on one aggressor row."""
    cmds = _hammer_triple(aggressor, op, data) * n
    return AccessTrace(cmds, {"generator": "single_sided", "aggressor": str(aggressor),
                              "n": str(n), "op": op})


def gen_double_sided(device, victim: RowAddress, n_per_side: int, op: str = "read") -> AccessTrace:
    """Alternate hammering of both physical neighbors of ``victim``, ``n_per_side`` each."""
    nbrs = device.physical_neighbors(victim)
    if len(nbrs) != 2:
        raise EdgeVictim(f"victim {victim} has only one physical neighbor")
    lo, hi = nbrs
    pair = (_hammer_triple(lo, op, device.fill_data(lo))
            + _hammer_triple(hi, op, device.fill_data(hi)))
    return AccessTrace(pair * n_per_side, {"generator": "double_sided", "victim": str(victim),
                                           "n_per_side": str(n_per_side), "op": op})


def gen_uniform_random(geometry, seed: int, n: int, write_fraction: float = 0.5) -> AccessTrace:
    """``n`` ACT / RD-or-WR / PRE triples at rows drawn uniformly over all banks."""
    rng = stream(seed, WORKLOAD_STREAM)
    rows = geometry.rows_per_bank
    flat = rng.integers(0, geometry.banks * rows, size=n).tolist()
    words = rng.integers(0, geometry.words_per_row, size=n).tolist()
    is_write = (rng.random(n) < write_fraction).tolist()
    data = rng.integers(0, 1 << 63, size=n, dtype="uint64").tolist()
    hibit = rng.integers(0, 2, size=n).tolist()
    cmds = []
    for i in range(n):
        addr = RowAddress(*divmod(flat[i], rows))
        cmds.append(Act(addr))
        if is_write[i]:
            cmds.append(Wr(addr, words[i], data[i] | (hibit[i] << 63)))
        else:
            cmds.append(Rd(addr, words[i]))
        cmds.append(Pre(addr.bank))
    return AccessTrace(cmds, {"generator": "uniform_random", "seed": str(seed), "n": str(n),
                              "write_fraction": repr(write_fraction)})


def gen_benign_sequential(geometry, n: int, bank: int = 0) -> AccessTrace:
    """``n`` reads sweeping rows of ``bank`` in order, wrapping around."""
    rows = geometry.rows_per_bank
    cmds = []
    for i in range(n):
        cmds.extend(_hammer_triple(RowAddress(bank, i % rows), "read", 0))
    return AccessTrace(cmds, {"generator": "benign_sequential", "bank": str(bank), "n": str(n)})


def generate(spec: WorkloadSpec, device, seed: int) -> AccessTrace:
    g = device.geometry
    if spec.kind == "file":
        return read_trace(spec.path)
    if spec.kind == "uniform_random":
        return gen_uniform_random(g, seed, spec.n, spec.write_fraction)
    if spec.kind == "benign_sequential":
        return gen_benign_sequential(g, spec.n, spec.bank)
    addr = RowAddress(spec.bank, spec.row)
    device.check_address(addr)
    if spec.kind == "single_sided":
        return gen_single_sided(addr, spec.n, spec.op, device.fill_data(addr))
    return gen_double_sided(device, addr, spec.n, spec.op)


def _format_command(c) -> str:
    t = type(c)
    if t is Act:
        return f"ACT {c.addr.bank} {c.addr.row}"
    if t is Pre:
        return f"PRE {c.bank}"
    if t is Rd:
        return f"RD {c.addr.bank} {c.addr.row} {c.word}"
    if t is Wr:
        return f"WR {c.addr.bank} {c.addr.row} {c.word} {c.data:016x}"
    if t is RefRow:
        return f"REF {c.addr.bank} {c.addr.row}"
    if t is Nop:
        return f"NOP {c.duration_ns}"
    raise TypeError(f"not a DRAM command: {c!r}")


def format_trace(trace: AccessTrace) -> str:
    lines = ["trace v1"]
    lines.extend(f"# {k}={v}" for k, v in trace.meta.items())
    cache: dict = {}
    for c in trace.commands:
        s = cache.get(c)
        if s is None:
            s = cache[c] = _format_command(c)
        lines.append(s)
    return "\n".join(lines) + "\n"


_ARITY = {"ACT": 2, "PRE": 1, "RD": 3, "WR": 4, "REF": 2, "NOP": 1}


def _nonneg(tok: str, lineno: int) -> int:
    if not tok.isdigit():
        raise TraceFormatError(f"line {lineno}: expected a non-negative integer, got {tok!r}")
    return int(tok)


def parse_trace(text: str) -> AccessTrace:
    if not text.endswith("\n"):
        raise TraceFormatError("trace is truncated (missing final newline)")
    lines = text[:-1].split("\n")
    if lines[0] != "trace v1":
        raise TraceFormatError(f"bad trace header: {lines[0]!r}")
    trace = AccessTrace()
    cache: dict = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                trace.meta[key] = value
            continue
        cmd = cache.get(line)
        if cmd is None:
            cmd = cache[line] = _parse_command(line, lineno)
        trace.commands.append(cmd)
    return trace


def _parse_command(line: str, lineno: int):
    parts = line.split(" ")
    op = parts[0]
    if op not in _ARITY or len(parts) - 1 != _ARITY[op]:
        raise TraceFormatError(f"line {lineno}: malformed command {line!r}")
    if op == "WR":
        b, r, w = (_nonneg(t, lineno) for t in parts[1:4])
        hexword = parts[4]
        if len(hexword) != 16:
            raise TraceFormatError(f"line {lineno}: WR data must be 16 hex digits")
        try:
            data = int(hexword, 16)
        except ValueError:
            raise TraceFormatError(f"line {lineno}: bad hex data {hexword!r}") from None
        return Wr(RowAddress(b, r), w, data)
    nums = [_nonneg(t, lineno) for t in parts[1:]]
    if op == "ACT":
        return Act(RowAddress(*nums))
    if op == "PRE":
        return Pre(nums[0])
    if op == "RD":
        return Rd(RowAddress(nums[0], nums[1]), nums[2])
    if op == "REF":
        return RefRow(RowAddress(*nums))
    return Nop(nums[0])


def write_trace(trace: AccessTrace, path):
    with open(path, "w", newline="") as fh:
        fh.write(format_trace(trace))


def read_trace(path) -> AccessTrace:
    with open(path, newline="") as fh:
        return parse_trace(fh.read())
