"""Memory controller: bank state machine, command issue, staggered refresh.

Timing is a sequential cost model on an integer-ns clock: ACT costs tRC,
every row refresh costs tRFC_row, NOP costs its duration, and RD/WR/PRE are
free. Row ``i`` of every bank is due for auto-refresh at
``floor(j * window / (k * rows))`` for slots ``j = i + 1, i + 1 + rows, ...``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .commands import Act, Nop, Pre, Rd, RefRow, RowAddress, Wr
from .errors import AddressError, BankAlreadyOpen, ProtocolError, RowNotOpen
from .faults import Flip
from .mitigation import CounterPolicy, MitigationConfig, ParaPolicy
from .report import RunReport
from .seeding import controller_rng

_SOURCE_FIELD = {
    "auto": "auto_refreshes",
    "mitigation": "mitigation_refreshes",
    "device": "device_refreshes",
    "command": "command_refreshes",
}


@dataclass
class CommandResult:
    data: int | None = None
    flips: list[Flip] = field(default_factory=list)
    refreshed: list[RowAddress] = field(default_factory=list)


class Controller:
    """Owns the controller state for one simulation instance.

    With ``record_events=True`` every state-changing event is appended to
    ``events`` as a tuple: ``("ACT", t, bank, row)``,
    ``("WR", t, bank, row, word, stored_raw)`` or
    ``("REF", t, bank, row, source)``.
    """

    def __init__(self, device, timing=None, mitigation: MitigationConfig | None = None,
                 seed: int = 0, record_events: bool = False):
        self.device = device
        self.timing = timing or device.timing
        self.mitigation = mitigation or MitigationConfig()
        self.seed = seed
        self.rng = controller_rng(seed)
        g = device.geometry
        self.open_rows: list[int | None] = [None] * g.banks
        self.now_ns = 0
        self.events = [] if record_events else None
        self.report = RunReport(seed=seed, mitigation=self.mitigation.label,
                                para_p=self.mitigation.para_p,
                                refresh_k=self.mitigation.refresh_k,
                                counter_threshold=self.mitigation.counter_threshold)

        self._rows = g.rows_per_bank
        self._slot = 1
        self._denom = self.mitigation.multiplier * g.rows_per_bank
        self._window_ns = self.timing.window_ns
        self._next_deadline = self._window_ns // self._denom
        self._tRC = self.timing.tRC_ns
        self._tRFC = self.timing.tRFC_row_ns
        self._refreshed = None

        m = self.mitigation
        self.para = None
        if m.para_p is not None:
            self.para = ParaPolicy(m.para_p, device, self.rng, self._mitigation_refresh, m.para_both)
        self.counters = None
        if m.counter_threshold is not None:
            self.counters = CounterPolicy(m.counter_threshold, device, self._mitigation_refresh,
                                          m.counter_scope)
            self.report.counter_table_entries = self.counters.table_entries

        self._handlers = {Act: self._act, Pre: self._pre, Rd: self._rd, Wr: self._wr,
                          RefRow: self._ref, Nop: self._nop}

    @property
    def refresh_cursor(self) -> int:
        """Row index the next auto-refresh slot will refresh."""
        return (self._slot - 1) % self._rows

    @property
    def next_refresh_ns(self) -> int:
        return self._next_deadline

    def _check(self, addr: RowAddress):
        g = self.device.geometry
        if not (0 <= addr.bank < g.banks and 0 <= addr.row < g.rows_per_bank):
            raise AddressError(f"row address {addr} out of range")

    # command handlers

    def _act(self, cmd: Act):
        addr = cmd.addr
        self._check(addr)
        b = addr.bank
        if self.open_rows[b] is not None:
            raise BankAlreadyOpen(f"ACT {addr}: bank {b} already has row {self.open_rows[b]} open")
        self.open_rows[b] = addr.row
        t = self.now_ns
        self.now_ns = t + self._tRC
        report = self.report
        report.acts += 1
        if self.events is not None:
            self.events.append(("ACT", t, b, addr.row))
        flips = self.device.faults.record_aggressor_activation(self.device, addr, t)
        if flips:
            report.flip_log.extend(flips)
        if self.counters is not None:
            self.counters.on_activate(addr)

    def _pre(self, cmd: Pre):
        b = cmd.bank
        if not 0 <= b < len(self.open_rows):
            raise AddressError(f"bank {b} out of range")
        row = self.open_rows[b]
        if row is None:
            raise RowNotOpen(f"PRE {b}: bank has no open row")
        self.open_rows[b] = None
        self.report.precharges += 1
        if self.para is not None:
            self.para.on_close(RowAddress(b, row))

    def _open_check(self, op: str, addr: RowAddress):
        self._check(addr)
        if self.open_rows[addr.bank] != addr.row:
            raise RowNotOpen(f"{op} {addr}: open row in bank {addr.bank} is {self.open_rows[addr.bank]}")

    def _rd(self, cmd: Rd) -> int:
        self._open_check("RD", cmd.addr)
        data = self.device.read_data(cmd.addr, cmd.word)
        self.report.reads += 1
        return data

    def _wr(self, cmd: Wr):
        addr = cmd.addr
        self._open_check("WR", addr)
        raw = self.device.write_data(addr, cmd.word, cmd.data)
        self.report.writes += 1
        if self.events is not None:
            self.events.append(("WR", self.now_ns, addr.bank, addr.row, cmd.word, raw))

    def _ref(self, cmd: RefRow):
        self._check(cmd.addr)
        self._refresh(cmd.addr, "command")

    def _nop(self, cmd: Nop):
        if cmd.duration_ns < 0:
            raise ValueError("NOP duration must be >= 0")
        self.now_ns += cmd.duration_ns

    # refresh paths

    def _refresh(self, addr: RowAddress, source: str):
        self.device.refresh(addr)
        if self.counters is not None:
            self.counters.on_refresh(addr)
        if self.events is not None:
            self.events.append(("REF", self.now_ns, addr.bank, addr.row, source))
        self.now_ns += self._tRFC
        rep = self.report
        name = _SOURCE_FIELD[source]
        setattr(rep, name, getattr(rep, name) + 1)
        if self._refreshed is not None:
            self._refreshed.append(addr)

    def _mitigation_refresh(self, addr: RowAddress):
        self._refresh(addr, "mitigation")

    def tick_refresh(self) -> int:
        """Refresh every row whose deadline is at or before the current clock."""
        now = self.now_ns
        banks = len(self.open_rows)
        n = 0
        while self._next_deadline <= now:
            row = (self._slot - 1) % self._rows
            for b in range(banks):
                self._refresh(RowAddress(b, row), "auto")
            n += banks
            self._slot += 1
            self._next_deadline = self._slot * self._window_ns // self._denom
        return n

    def targeted_refresh(self, addr: RowAddress):
        """Device-initiated refresh of ``addr`` (counted apart from controller refreshes)."""
        self._check(addr)
        self._refresh(addr, "device")

    # public issue / replay

    def issue(self, cmd) -> CommandResult:
        n_flips = len(self.report.flip_log)
        self._refreshed = []
        try:
            value = self._handlers[type(cmd)](cmd)
            refreshed = self._refreshed
        finally:
            self._refreshed = None
            self.report.sim_time_ns = self.now_ns
        return CommandResult(data=value if isinstance(cmd, Rd) else None,
                             flips=self.report.flip_log[n_flips:], refreshed=refreshed)

    def run(self, commands) -> RunReport:
        """Replay ``commands``, interposing auto-refresh by deadline."""
        handlers = self._handlers
        i = -1
        try:
            for i, cmd in enumerate(commands):
                if self.now_ns >= self._next_deadline:
                    self.tick_refresh()
                handlers[type(cmd)](cmd)
        except (ProtocolError, AddressError) as exc:
            exc.position = i
            raise
        self.tick_refresh()
        self.report.sim_time_ns = self.now_ns
        return self.report
