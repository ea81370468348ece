"""SECDED (72,64) codec built from an odd-weight-column (Hsiao) parity-check matrix.

Codewords are plain ints: bits 0..63 hold the data word, bits 64..71 the
check byte. Every column of H has odd weight, so a single error gives an
odd-weight syndrome equal to its column and any double error gives a
nonzero even-weight syndrome.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations

DATA_BITS = 64
CHECK_BITS = 8
CODE_BITS = DATA_BITS + CHECK_BITS
DATA_MASK = (1 << DATA_BITS) - 1


def _build_columns() -> list[int]:
    cols = [sum(1 << i for i in c) for c in combinations(range(CHECK_BITS), 3)]
    # Eight weight-5 columns fill out the 64 data positions; pick them
    # greedily to keep the parity-tree row weights balanced.
    load = [sum((c >> i) & 1 for c in cols) for i in range(CHECK_BITS)]
    pool = [sum(1 << i for i in c) for c in combinations(range(CHECK_BITS), 5)]
    while len(cols) < DATA_BITS:
        best = min(pool, key=lambda c: (max(load[i] + ((c >> i) & 1) for i in range(CHECK_BITS)),
                                        sum(load[i] for i in range(CHECK_BITS) if (c >> i) & 1)))
        pool.remove(best)
        cols.append(best)
        for i in range(CHECK_BITS):
            load[i] += (best >> i) & 1
    return cols


COLUMNS = _build_columns()
ROW_MASKS = [sum(1 << j for j, c in enumerate(COLUMNS) if (c >> i) & 1) for i in range(CHECK_BITS)]
_SYNDROME_POSITION = {c: j for j, c in enumerate(COLUMNS)}
_SYNDROME_POSITION.update({1 << i: DATA_BITS + i for i in range(CHECK_BITS)})


class Outcome(enum.Enum):
    CLEAN = "clean"
    CORRECTED = "corrected"
    UNCORRECTABLE = "uncorrectable"


@dataclass(frozen=True)
class DecodeStatus:
    outcome: Outcome
    position: int | None = None

    def __repr__(self):
        if self.outcome is Outcome.CORRECTED:
            return f"Corrected({self.position})"
        return "Clean" if self.outcome is Outcome.CLEAN else "DetectedUncorrectable"


CLEAN = DecodeStatus(Outcome.CLEAN)
UNCORRECTABLE = DecodeStatus(Outcome.UNCORRECTABLE)


def check_bits(data: int) -> int:
    c = 0
    for i, m in enumerate(ROW_MASKS):
        c |= ((data & m).bit_count() & 1) << i
    return c


def encode(data: int) -> int:
    data &= DATA_MASK
    return data | (check_bits(data) << DATA_BITS)


def syndrome(cw: int) -> int:
    return check_bits(cw & DATA_MASK) ^ (cw >> DATA_BITS)


def decode(cw: int) -> tuple[int, DecodeStatus]:
    """Decode a 72-bit codeword into ``(data, status)``.

    On ``UNCORRECTABLE`` the returned data is the raw (untrusted) data field.
    """
    s = syndrome(cw)
    data = cw & DATA_MASK
    if s == 0:
        return data, CLEAN
    if s.bit_count() & 1:
        pos = _SYNDROME_POSITION.get(s)
        if pos is not None:
            if pos < DATA_BITS:
                data ^= 1 << pos
            return data, DecodeStatus(Outcome.CORRECTED, pos)
    return data, UNCORRECTABLE


@dataclass
class EccCensus:
    clean: int = 0
    corrected: int = 0
    uncorrectable: int = 0


def scrub_with_ecc(device, report=None) -> EccCensus:
    """Decode every stored codeword, repair correctable ones in place, tally outcomes.

    If ``report`` is given, the census is written to its ``ecc_*`` fields.
    """
    if not device.ecc:
        raise ValueError("device was built without ECC")
    census = EccCensus()
    for pidx, words in enumerate(device.storage):
        for w, cw in enumerate(words):
            data, status = decode(cw)
            if status is CLEAN:
                census.clean += 1
            elif status.outcome is Outcome.CORRECTED:
                census.corrected += 1
                words[w] = encode(data)
                device.faults.note_write(pidx)
            else:
                census.uncorrectable += 1
    if report is not None:
        report.ecc_clean = census.clean
        report.ecc_corrected = census.corrected
        report.ecc_uncorrectable = census.uncorrectable
    return census
