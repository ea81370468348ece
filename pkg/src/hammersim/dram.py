"""DRAM geometry, row storage, logical-to-physical adjacency and its SPD export."""
from __future__ import annotations

from dataclasses import dataclass, field

from . import ecc
from .commands import RowAddress
from .errors import AddressError, GeometryError, ConfigError, SpdFormatError
from .faults import FaultModel, FaultModelParams, CellProfile, sample_profiles
from .seeding import ADJACENCY_STREAM, stream

WORD_MASK = (1 << 64) - 1
FILLS = ("ones", "zeros", "checkerboard")
ADJACENCY_KINDS = ("identity", "permuted")


@dataclass(frozen=True)
class Geometry:
    banks: int = 1
    rows_per_bank: int = 8
    bits_per_row: int = 64
    spare_rows_per_bank: int = 0

    def __post_init__(self):
        if self.banks < 1:
            raise GeometryError("geometry.banks", "banks must be >= 1")
        if self.rows_per_bank < 1:
            raise GeometryError("geometry.rows_per_bank", "rows_per_bank must be >= 1")
        if self.bits_per_row < 1 or self.bits_per_row % 64:
            raise GeometryError("geometry.bits_per_row", "bits_per_row must be a positive multiple of 64")
        if not 0 <= self.spare_rows_per_bank < self.rows_per_bank:
            raise GeometryError("geometry.spare_rows_per_bank",
                                "spare_rows_per_bank must satisfy 0 <= spares < rows_per_bank")

    @property
    def words_per_row(self) -> int:
        return self.bits_per_row // 64

    @property
    def user_rows(self) -> int:
        """Logical rows below the spare region."""
        return self.rows_per_bank - self.spare_rows_per_bank


@dataclass(frozen=True)
class TimingParams:
    tRC_ns: int = 50
    tRFC_row_ns: int = 100
    refresh_window_ms: float = 64.0

    def __post_init__(self):
        for key in ("tRC_ns", "tRFC_row_ns", "refresh_window_ms"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"timing.{key}", "must be strictly positive")

    @property
    def window_ns(self) -> int:
        return round(self.refresh_window_ms * 1_000_000)


class AdjacencyMap:
    """Per-bank bijection between logical and physical row indices.

    Physical row ``r`` is adjacent to ``r - 1`` and ``r + 1``.
    """

    def __init__(self, to_phys: list[list[int]]):
        if not to_phys:
            raise ValueError("adjacency map needs at least one bank")
        rows = len(to_phys[0])
        self.to_logical = []
        for b, perm in enumerate(to_phys):
            if len(perm) != rows:
                raise ValueError(f"bank {b}: expected {rows} rows, got {len(perm)}")
            inv = [-1] * rows
            for lrow, prow in enumerate(perm):
                if not 0 <= prow < rows:
                    raise ValueError(f"bank {b}: physical index {prow} out of range")
                if inv[prow] != -1:
                    raise ValueError(f"bank {b}: physical index {prow} assigned twice")
                inv[prow] = lrow
            self.to_logical.append(inv)
        self.to_phys = [list(p) for p in to_phys]

    @classmethod
    def identity(cls, banks: int, rows: int) -> AdjacencyMap:
        return cls([list(range(rows)) for _ in range(banks)])

    @classmethod
    def permuted(cls, banks: int, rows: int, seed: int) -> AdjacencyMap:
        rng = stream(seed, ADJACENCY_STREAM)
        return cls([rng.permutation(rows).tolist() for _ in range(banks)])

    @property
    def banks(self) -> int:
        return len(self.to_phys)

    @property
    def rows(self) -> int:
        return len(self.to_phys[0])

    def neighbors(self, bank: int, row: int) -> list[int]:
        """Logical rows physically adjacent to logical ``row``, lower physical index first."""
        p = self.to_phys[bank][row]
        inv = self.to_logical[bank]
        out = []
        if p > 0:
            out.append(inv[p - 1])
        if p + 1 < len(inv):
            out.append(inv[p + 1])
        return out

    def swap(self, bank: int, a: int, b: int):
        perm = self.to_phys[bank]
        perm[a], perm[b] = perm[b], perm[a]
        inv = self.to_logical[bank]
        inv[perm[a]] = a
        inv[perm[b]] = b

    def copy(self) -> AdjacencyMap:
        return AdjacencyMap(self.to_phys)

    def __eq__(self, other):
        return isinstance(other, AdjacencyMap) and self.to_phys == other.to_phys

    def __repr__(self):
        return f"AdjacencyMap(banks={self.banks}, rows={self.rows})"


def format_spd(adjacency: AdjacencyMap) -> str:
    lines = [f"spd v1 banks={adjacency.banks} rows={adjacency.rows}"]
    for b, perm in enumerate(adjacency.to_phys):
        lines.append(f"bank {b}: " + " ".join(map(str, perm)))
    return "\n".join(lines) + "\n"


def parse_spd(text: str) -> AdjacencyMap:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SpdFormatError("empty SPD record")
    head = lines[0].split()
    try:
        if len(head) != 4 or head[:2] != ["spd", "v1"]:
            raise ValueError
        banks = int(head[2].removeprefix("banks="))
        rows = int(head[3].removeprefix("rows="))
        if not head[2].startswith("banks=") or not head[3].startswith("rows="):
            raise ValueError
    except ValueError:
        raise SpdFormatError(f"bad SPD header: {lines[0]!r}") from None
    if banks < 1 or rows < 1:
        raise SpdFormatError("SPD header declares an empty device")
    if len(lines) - 1 != banks:
        raise SpdFormatError(f"expected {banks} bank lines, found {len(lines) - 1}")
    perms = []
    for b, line in enumerate(lines[1:]):
        prefix = f"bank {b}:"
        if not line.startswith(prefix):
            raise SpdFormatError(f"line {b + 2}: expected {prefix!r}")
        try:
            perm = [int(tok) for tok in line[len(prefix):].split()]
        except ValueError:
            raise SpdFormatError(f"line {b + 2}: non-integer entry") from None
        if len(perm) != rows:
            raise SpdFormatError(f"bank {b}: expected {rows} entries, found {len(perm)}")
        perms.append(perm)
    try:
        return AdjacencyMap(perms)
    except ValueError as exc:
        raise SpdFormatError(str(exc)) from None


def export_adjacency(device) -> str:
    """SPD record text describing ``device``'s row adjacency."""
    adjacency = device.adjacency if isinstance(device, DramDevice) else device
    return format_spd(adjacency)


def import_adjacency(record: str) -> AdjacencyMap:
    return parse_spd(record)


def write_spd(device, path):
    with open(path, "w", newline="") as fh:
        fh.write(export_adjacency(device))


def read_spd(path) -> AdjacencyMap:
    with open(path, newline="") as fh:
        return parse_spd(fh.read())


def fill_word(fill: str, prow: int) -> int:
    if fill == "ones":
        return WORD_MASK
    if fill == "zeros":
        return 0
    return 0x5555_5555_5555_5555 if prow % 2 == 0 else 0xAAAA_AAAA_AAAA_AAAA


@dataclass
class DramDevice:
    """Row storage, cell profiles and adjacency of one DRAM device.

    Storage and exposure are indexed by flat physical row
    ``bank * rows_per_bank + physical_row``; the public methods take logical
    ``RowAddress`` values.
    """

    geometry: Geometry
    timing: TimingParams
    fault_params: FaultModelParams
    seed: int
    adjacency: AdjacencyMap
    fill: str
    ecc: bool
    storage: list[list[int]]
    faults: FaultModel
    retired: list[tuple[RowAddress, int, int]] = field(default_factory=list)
    _free_spares: list[list[int]] = field(default_factory=list, repr=False)
    _nbr_cache: dict = field(default_factory=dict, repr=False)

    @property
    def word_bits(self) -> int:
        return ecc.CODE_BITS if self.ecc else 64

    @property
    def cells_per_row(self) -> int:
        return self.geometry.words_per_row * self.word_bits

    def check_address(self, addr: RowAddress):
        g = self.geometry
        if not (0 <= addr.bank < g.banks and 0 <= addr.row < g.rows_per_bank):
            raise AddressError(f"row address {addr} out of range "
                               f"(banks={g.banks}, rows={g.rows_per_bank})")

    def pidx(self, addr: RowAddress) -> int:
        return addr.bank * self.geometry.rows_per_bank + self.adjacency.to_phys[addr.bank][addr.row]

    def logical_of(self, pidx: int) -> tuple[int, int]:
        bank, prow = divmod(pidx, self.geometry.rows_per_bank)
        return bank, self.adjacency.to_logical[bank][prow]

    def physical_neighbors(self, addr: RowAddress) -> list[RowAddress]:
        self.check_address(addr)
        key = (addr.bank, addr.row)
        hit = self._nbr_cache.get(key)
        if hit is None:
            rows = self.geometry.rows_per_bank
            logical = self.adjacency.neighbors(addr.bank, addr.row)
            nbrs = [RowAddress(addr.bank, r) for r in logical]
            pidxs = tuple(addr.bank * rows + self.adjacency.to_phys[addr.bank][r] for r in logical)
            hit = self._nbr_cache[key] = (nbrs, pidxs)
        return hit[0]

    def neighbor_pidx(self, addr: RowAddress) -> tuple[int, ...]:
        hit = self._nbr_cache.get((addr.bank, addr.row))
        if hit is None:
            self.physical_neighbors(addr)
            hit = self._nbr_cache[(addr.bank, addr.row)]
        return hit[1]

    def exposure(self, addr: RowAddress) -> int:
        self.check_address(addr)
        return self.faults.exposure[self.pidx(addr)]

    def _check_word(self, word: int):
        if not 0 <= word < self.geometry.words_per_row:
            raise AddressError(f"word index {word} out of range (words_per_row={self.geometry.words_per_row})")

    def read_raw(self, addr: RowAddress, word: int) -> int:
        """Stored word as held by the cells (a 72-bit codeword when ECC is on)."""
        self._check_word(word)
        return self.storage[self.pidx(addr)][word]

    def read_data(self, addr: RowAddress, word: int) -> int:
        raw = self.read_raw(addr, word)
        if self.ecc:
            return ecc.decode(raw)[0]
        return raw

    def write_data(self, addr: RowAddress, word: int, data: int) -> int:
        self._check_word(word)
        data &= WORD_MASK
        raw = ecc.encode(data) if self.ecc else data
        p = self.pidx(addr)
        self.storage[p][word] = raw
        self.faults.note_write(p)
        return raw

    def fill_data(self, addr: RowAddress) -> int:
        """Data word the configured fill pattern places in ``addr``."""
        return fill_word(self.fill, self.adjacency.to_phys[addr.bank][addr.row])

    def refresh(self, addr: RowAddress):
        self.faults.reset_exposure(self.pidx(addr))

    def cell_profile(self, addr: RowAddress, bit: int) -> CellProfile:
        self.check_address(addr)
        return self.faults.profiles.profile(self.pidx(addr), bit)

    def set_cell_profile(self, addr: RowAddress, bit: int, profile: CellProfile):
        """Override one cell's profile; meant for building scenarios before a run."""
        self.check_address(addr)
        p = self.pidx(addr)
        self.faults.profiles.set_cell(p, bit, profile)
        self.faults.reload_row(p)

    def clear_vulnerability(self):
        """Make every cell invulnerable."""
        for p in range(len(self.storage)):
            self.faults.profiles.clear_row(p)
            self.faults.reload_row(p)

    def vulnerable_rows(self) -> list[RowAddress]:
        rows = self.geometry.rows_per_bank
        out = []
        for b in range(self.geometry.banks):
            for lrow in range(self.geometry.user_rows):
                if self.faults.profiles.cells[b * rows + self.adjacency.to_phys[b][lrow]]:
                    out.append(RowAddress(b, lrow))
        return out

    def free_spares(self, bank: int) -> int:
        return len(self._free_spares[bank])

    def remap(self, addr: RowAddress) -> tuple[int, int]:
        """Move logical row ``addr`` onto the next free spare physical row.

        The spare's logical slot takes over the old physical row, so the
        map stays a bijection. Data moves with the logical row. Returns
        ``(old_physical, new_physical)``.
        """
        spares = self._free_spares[addr.bank]
        slot = spares.pop(0)
        adj = self.adjacency
        old_p = adj.to_phys[addr.bank][addr.row]
        new_p = adj.to_phys[addr.bank][slot]
        adj.swap(addr.bank, addr.row, slot)
        base = addr.bank * self.geometry.rows_per_bank
        st = self.storage
        st[base + old_p], st[base + new_p] = st[base + new_p], st[base + old_p]
        # The old physical row is out of service now: it holds no user data,
        # so disturbance there is not an observable error.
        self.faults.profiles.clear_row(base + old_p)
        self.faults.reload_row(base + old_p)
        self.faults.reload_row(base + new_p)
        self._nbr_cache.clear()
        self.retired.append((addr, old_p, new_p))
        return old_p, new_p


def build_device(geometry: Geometry = Geometry(), timing: TimingParams = TimingParams(),
                 fault: FaultModelParams = FaultModelParams(), seed: int = 0, *,
                 fill: str = "ones", adjacency: str = "identity", ecc_on: bool = False) -> DramDevice:
    """Construct a device with filled storage and seeded cell profiles.

    Spare rows (the top ``spare_rows_per_bank`` logical rows of each bank)
    are built invulnerable so that retirement has clean targets.
    """
    if fill not in FILLS:
        raise ConfigError("device.fill", f"must be one of {', '.join(FILLS)}")
    if adjacency not in ADJACENCY_KINDS:
        raise ConfigError("device.adjacency", f"must be one of {', '.join(ADJACENCY_KINDS)}")
    banks, rows = geometry.banks, geometry.rows_per_bank
    if adjacency == "identity":
        adj = AdjacencyMap.identity(banks, rows)
    else:
        adj = AdjacencyMap.permuted(banks, rows, seed)

    word_bits = ecc.CODE_BITS if ecc_on else 64
    profiles = sample_profiles(geometry, fault, seed, geometry.words_per_row * word_bits)
    spare_slots = list(range(geometry.user_rows, rows))
    for b in range(banks):
        for slot in spare_slots:
            profiles.clear_row(b * rows + adj.to_phys[b][slot])

    storage = []
    for pidx in range(banks * rows):
        data = fill_word(fill, pidx % rows)
        raw = ecc.encode(data) if ecc_on else data
        storage.append([raw] * geometry.words_per_row)

    return DramDevice(
        geometry=geometry, timing=timing, fault_params=fault, seed=seed,
        adjacency=adj, fill=fill, ecc=ecc_on, storage=storage,
        faults=FaultModel(profiles, storage, word_bits),
        _free_spares=[list(spare_slots) for _ in range(banks)],
    )
