"""Disturbance-error model: per-cell thresholds, hammer exposure, bit flips.

Cell profiles are stored sparsely. Only vulnerable cells (finite threshold)
are kept, per physical row, sorted by threshold. Exposure is tracked per
physical row and counts activations of physically adjacent rows since the
row was last refreshed; the two neighbors' contributions add.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .seeding import PROFILE_STREAM, stream

INF = math.inf

ORIENTATIONS = ("all-true", "alternate-by-physical-row", "seeded-random")


@dataclass(frozen=True)
class CellProfile:
    threshold: float
    orientation: str  # "true" or "anti"

    @property
    def charged(self) -> int:
        return 1 if self.orientation == "true" else 0

    @property
    def vulnerable(self) -> bool:
        return self.threshold != INF


@dataclass(frozen=True)
class FaultModelParams:
    vulnerable_fraction: float = 1e-5
    threshold_min: int = 50_000
    threshold_max: int = 200_000
    orientation: str = "all-true"

    def __post_init__(self):
        if not 0.0 <= self.vulnerable_fraction <= 1.0:
            raise ConfigError("fault.vulnerable_fraction", "must lie in [0, 1]")
        if self.threshold_min < 1:
            raise ConfigError("fault.threshold_min", "must be >= 1")
        if self.threshold_max < self.threshold_min:
            raise ConfigError("fault.threshold_max", "must be >= fault.threshold_min")
        if self.orientation not in ORIENTATIONS:
            raise ConfigError("fault.orientation", f"must be one of {', '.join(ORIENTATIONS)}")


@dataclass(frozen=True)
class Flip:
    time_ns: int
    bank: int
    row: int
    bit: int
    old: int
    new: int


class ProfileTable:
    """Sparse per-cell profiles indexed by flat physical row ``bank * rows + prow``.

    ``cells[pidx]`` is a list of ``(threshold, bit, charged)`` sorted by
    threshold then bit. Cells not listed are invulnerable.
    """

    def __init__(self, n_rows: int, cells_per_row: int, charged_by_row: list[int]):
        self.cells_per_row = cells_per_row
        self.cells: list[list[tuple[int, int, int]]] = [[] for _ in range(n_rows)]
        self.charged_by_row = charged_by_row

    def profile(self, pidx: int, bit: int) -> CellProfile:
        if not 0 <= bit < self.cells_per_row:
            raise IndexError(f"bit {bit} out of range")
        for th, b, charged in self.cells[pidx]:
            if b == bit:
                return CellProfile(th, "true" if charged else "anti")
        return CellProfile(INF, "true" if self.charged_by_row[pidx] else "anti")

    def set_cell(self, pidx: int, bit: int, profile: CellProfile):
        if not 0 <= bit < self.cells_per_row:
            raise IndexError(f"bit {bit} out of range")
        row = [c for c in self.cells[pidx] if c[1] != bit]
        if profile.vulnerable:
            if profile.threshold < 1:
                raise ValueError("finite threshold must be >= 1")
            row.append((int(profile.threshold), bit, profile.charged))
            row.sort()
        self.cells[pidx] = row

    def clear_row(self, pidx: int):
        self.cells[pidx] = []

    def vulnerable_count(self) -> int:
        return sum(len(r) for r in self.cells)

    def min_threshold(self, pidx: int) -> float:
        row = self.cells[pidx]
        return row[0][0] if row else INF


def _bernoulli_positions(rng: np.random.Generator, total: int, p: float) -> np.ndarray:
    # Geometric gaps between successes give an exact Bernoulli(p) process in
    # O(successes) memory, which matters for large, sparsely vulnerable devices.
    if p <= 0.0 or total == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    chunks = []
    pos = -1
    chunk = int(total * p * 1.1) + 64
    while True:
        gaps = rng.geometric(p, size=chunk)
        steps = pos + np.cumsum(gaps)
        if steps[-1] >= total:
            chunks.append(steps[steps < total])
            break
        chunks.append(steps)
        pos = int(steps[-1])
    return np.concatenate(chunks)


def sample_profiles(geometry, params: FaultModelParams, seed: int,
                    cells_per_row: int | None = None) -> ProfileTable:
    """Sample per-cell vulnerability for every physical row of ``geometry``.

    Each cell is independently vulnerable with probability
    ``params.vulnerable_fraction``; vulnerable cells get a threshold drawn
    uniformly from ``[threshold_min, threshold_max]``. Orientation is a
    per-physical-row property (true-cells store charge as 1).
    """
    if cells_per_row is None:
        cells_per_row = geometry.bits_per_row
    n_rows = geometry.banks * geometry.rows_per_bank
    rng = stream(seed, PROFILE_STREAM)

    if params.orientation == "all-true":
        charged_by_row = [1] * n_rows
    elif params.orientation == "alternate-by-physical-row":
        rows = geometry.rows_per_bank
        charged_by_row = [1 if (i % rows) % 2 == 0 else 0 for i in range(n_rows)]
    else:
        charged_by_row = rng.integers(0, 2, size=n_rows).tolist()

    table = ProfileTable(n_rows, cells_per_row, charged_by_row)
    positions = _bernoulli_positions(rng, n_rows * cells_per_row, params.vulnerable_fraction)
    thresholds = rng.integers(params.threshold_min, params.threshold_max + 1, size=len(positions))
    for pos, th in zip(positions.tolist(), thresholds.tolist()):
        pidx, bit = divmod(pos, cells_per_row)
        table.cells[pidx].append((th, bit, charged_by_row[pidx]))
    for row in table.cells:
        row.sort()
    return table


class FaultModel:
    """Exposure table plus the eager flip materialization logic.

    The model reads and mutates ``storage`` (flat list of per-row word lists,
    shared with the device) when a flip happens.
    """

    def __init__(self, profiles: ProfileTable, storage: list[list[int]], word_bits: int):
        self.profiles = profiles
        self.storage = storage
        self.word_bits = word_bits
        n = len(storage)
        self.exposure = [0] * n
        self._cursor = [0] * n
        self._next = [INF] * n
        # Cells whose threshold was crossed this epoch while holding their
        # discharged value; they flip as soon as they hold charge again.
        self._armed: list[list | None] = [None] * n
        # Only a write can recharge an armed cell, so armed cells are
        # re-examined only once their row has been written.
        self._written = [False] * n
        for pidx in range(n):
            self._reload(pidx)

    def _reload(self, pidx: int):
        cells = self.profiles.cells[pidx]
        self._cursor[pidx] = 0
        self._next[pidx] = cells[0][0] if cells else INF
        self._armed[pidx] = None
        self._written[pidx] = False

    def note_write(self, pidx: int):
        if self._armed[pidx]:
            self._written[pidx] = True

    def reload_row(self, pidx: int):
        """Re-read a row's profile after it was edited; restarts its epoch bookkeeping."""
        self._reload(pidx)

    def record_aggressor_activation(self, device, aggressor, now_ns: int = 0) -> list[Flip]:
        """Add one unit of exposure to each physical neighbor of ``aggressor``.

        Returns the flips this activation caused.
        """
        flips = None
        exposure = self.exposure
        nxt = self._next
        written = self._written
        for v in device.neighbor_pidx(aggressor):
            e = exposure[v] + 1
            exposure[v] = e
            if e >= nxt[v] or written[v]:
                new = self.materialize_flips(device, v, now_ns)
                if new:
                    if flips is None:
                        flips = new
                    else:
                        flips.extend(new)
        return flips or []

    def materialize_flips(self, device, pidx: int, now_ns: int = 0) -> list[Flip]:
        """Flip every crossed, charged cell of physical row ``pidx`` not yet flipped this epoch."""
        e = self.exposure[pidx]
        cells = self.profiles.cells[pidx]
        cur = self._cursor[pidx]
        armed = self._armed[pidx]
        while cur < len(cells) and cells[cur][0] <= e:
            if armed is None:
                armed = []
            armed.append(cells[cur])
            cur += 1
        self._cursor[pidx] = cur
        self._next[pidx] = cells[cur][0] if cur < len(cells) else INF
        self._written[pidx] = False
        if not armed:
            self._armed[pidx] = None
            return []

        words = self.storage[pidx]
        wbits = self.word_bits
        flips = []
        pending = []
        for cell in armed:
            _, bit, charged = cell
            w, off = divmod(bit, wbits)
            if (words[w] >> off) & 1 == charged:
                words[w] ^= 1 << off
                if not flips:
                    bank, row = device.logical_of(pidx)
                flips.append(Flip(now_ns, bank, row, bit, charged, charged ^ 1))
            else:
                pending.append(cell)
        self._armed[pidx] = pending or None
        return flips

    def reset_exposure(self, pidx: int):
        # Stored words are left as they are: refresh re-latches current
        # contents, so a flipped bit stays flipped.
        self.exposure[pidx] = 0
        self._reload(pidx)


FLIP_LOG_COLUMNS = ("time_ns", "bank", "row", "bit", "old", "new")


def write_flip_log(flips, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FLIP_LOG_COLUMNS)
        for f in flips:
            writer.writerow((f.time_ns, f.bank, f.row, f.bit, f.old, f.new))


def read_flip_log(path) -> list[Flip]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [Flip(*(int(r[c]) for c in FLIP_LOG_COLUMNS)) for r in reader]
