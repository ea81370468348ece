"""DRAM command types issued to the controller.

Commands are immutable so generators can reuse a single instance many times
(a hammer loop is the same three commands repeated).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True, slots=True)
class RowAddress:
    bank: int
    row: int

    def __str__(self):
        return f"{self.bank}:{self.row}"


@dataclass(frozen=True, slots=True)
class Act:
    addr: RowAddress


@dataclass(frozen=True, slots=True)
class Pre:
    bank: int


@dataclass(frozen=True, slots=True)
class Rd:
    addr: RowAddress
    word: int


@dataclass(frozen=True, slots=True)
class Wr:
    addr: RowAddress
    word: int
    data: int


@dataclass(frozen=True, slots=True)
class RefRow:
    addr: RowAddress


@dataclass(frozen=True, slots=True)
class Nop:
    duration_ns: int


DramCommand = Union[Act, Pre, Rd, Wr, RefRow, Nop]
