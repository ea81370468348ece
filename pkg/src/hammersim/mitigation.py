"""RowHammer countermeasures as controller policies.

Available: refresh-rate multiplication (RefreshX), PARA, per-row activation
counters with neighbor refresh, and row retirement onto spare rows. Any
subset can be combined in one ``MitigationConfig``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .commands import RowAddress
from .errors import ConfigError, SparesExhausted
from .seeding import controller_rng, trial_seed

NAMES = ("refreshx", "para", "counters", "retire")
COUNTER_SCOPES = ("victim", "aggressor")


@dataclass(frozen=True)
class MitigationConfig:
    """Which countermeasures are active. ``None`` knobs are inactive."""

    refresh_k: int | None = None
    para_p: float | None = None
    para_both: bool = False
    counter_threshold: int | None = None
    counter_scope: str = "victim"
    retire_rows: tuple[RowAddress, ...] | None = None

    def __post_init__(self):
        if self.refresh_k is not None and self.refresh_k < 1:
            raise ConfigError("refreshx.k", "multiplier must be >= 1")
        if self.para_p is not None and not 0.0 <= self.para_p <= 1.0:
            raise ConfigError("para.p", "probability must lie in [0, 1]")
        if self.counter_threshold is not None and self.counter_threshold < 1:
            raise ConfigError("counters.threshold", "must be >= 1")
        if self.counter_scope not in COUNTER_SCOPES:
            raise ConfigError("counters.scope", f"must be one of {', '.join(COUNTER_SCOPES)}")

    @property
    def active(self) -> tuple[str, ...]:
        on = {
            "refreshx": self.refresh_k is not None,
            "para": self.para_p is not None,
            "counters": self.counter_threshold is not None,
            "retire": self.retire_rows is not None,
        }
        return tuple(n for n in NAMES if on[n])

    @property
    def label(self) -> str:
        return "+".join(self.active) or "none"

    @property
    def multiplier(self) -> int:
        return self.refresh_k or 1


def apply_refresh_multiplier(config: MitigationConfig, timing) -> float:
    """Effective per-row refresh period in ms."""
    return timing.refresh_window_ms / config.multiplier


class ParaPolicy:
    """On every row close, with probability p refresh one physical neighbor.

    A single uniform draw ``u`` decides both whether to refresh and which
    side: ``u < p/2`` picks the lower physical neighbor, ``p/2 <= u < p``
    the upper one. An edge row's only neighbor is picked whenever ``u < p``.
    """

    def __init__(self, p: float, device, rng: np.random.Generator, refresh, both: bool = False):
        self.p = p
        self.half = p / 2
        self.device = device
        self.rng = rng
        self.refresh = refresh
        self.both = both

    def on_close(self, closed: RowAddress) -> list[RowAddress]:
        u = self.rng.random()
        if u >= self.p:
            return []
        nbrs = self.device.physical_neighbors(closed)
        if self.both:
            targets = list(nbrs)
        elif len(nbrs) == 1:
            targets = [nbrs[0]]
        else:
            targets = [nbrs[0] if u < self.half else nbrs[1]]
        for t in targets:
            self.refresh(t)
        return targets


def para_on_close(policy: ParaPolicy, closed: RowAddress):
    refreshed = policy.on_close(closed)
    return refreshed[0] if len(refreshed) == 1 else (refreshed or None)


class CounterPolicy:
    """Exact per-row activation counters that trigger neighbor refreshes.

    ``scope="victim"`` (default): each ACT bumps the counter of both
    physical neighbors of the activated row, and a row whose counter reaches
    the threshold is refreshed. Because the two neighbors' disturbance adds
    up, this is what makes ``threshold < min cell threshold`` flip-free.

    ``scope="aggressor"``: the activated row's own counter is bumped and,
    on reaching the threshold, both its neighbors are refreshed. Under
    double-sided hammering this is only safe for thresholds up to about
    half the minimum cell threshold.

    Counters reset on trigger and whenever their row is refreshed.
    """

    def __init__(self, threshold: int, device, refresh, scope: str = "victim"):
        self.threshold = threshold
        self.device = device
        self.refresh = refresh
        self.scope = scope
        self.rows = device.geometry.rows_per_bank
        self.counts = [0] * (device.geometry.banks * self.rows)

    @property
    def table_entries(self) -> int:
        return len(self.counts)

    def on_activate(self, aggressor: RowAddress) -> list[RowAddress]:
        counts = self.counts
        rows = self.rows
        fired = []
        if self.scope == "victim":
            for v in self.device.physical_neighbors(aggressor):
                i = v.bank * rows + v.row
                c = counts[i] + 1
                counts[i] = c
                if c >= self.threshold:
                    fired.append(v)
        else:
            i = aggressor.bank * rows + aggressor.row
            c = counts[i] + 1
            counts[i] = c
            if c >= self.threshold:
                counts[i] = 0
                fired.extend(self.device.physical_neighbors(aggressor))
        for v in fired:
            self.refresh(v)
        return fired

    def on_refresh(self, addr: RowAddress):
        self.counts[addr.bank * self.rows + addr.row] = 0


def counters_on_activate(policy: CounterPolicy, aggressor: RowAddress) -> list[RowAddress]:
    return policy.on_activate(aggressor)


@dataclass(frozen=True)
class Remap:
    addr: RowAddress
    old_physical: int
    new_physical: int


def retire_rows(device, rows) -> list[Remap]:
    """Remap each logical row onto an invulnerable spare physical row."""
    rows = list(rows)
    for addr in rows:
        device.check_address(addr)
        if addr.row >= device.geometry.user_rows:
            raise ConfigError("retire.rows", f"row {addr} lies in the spare region")
    need: dict[int, int] = {}
    for addr in rows:
        need[addr.bank] = need.get(addr.bank, 0) + 1
    for bank, n in need.items():
        if n > device.free_spares(bank):
            raise SparesExhausted(f"bank {bank}: {n} rows to retire, {device.free_spares(bank)} spares left")
    out = []
    for addr in rows:
        old_p, new_p = device.remap(addr)
        out.append(Remap(addr, old_p, new_p))
    return out


# Batched PARA trials. They consume the controller stream exactly as
# ParaPolicy does for a pure single-sided hammer loop (one draw per close,
# nothing else drawing), so each trial's outcome matches a full replay with
# the same seed, at numpy speed.

def _trial_draws(seed: int, index: int, n_closes: int) -> np.ndarray:
    return controller_rng(trial_seed(seed, index)).random(n_closes)


def para_survival_trials(p: float, n_closes: int, trials: int, seed: int = 0) -> np.ndarray:
    """Per trial: did the lower neighbor of an interior aggressor escape every PARA refresh?"""
    half = p / 2
    out = np.empty(trials, dtype=bool)
    for i in range(trials):
        out[i] = not (_trial_draws(seed, i, n_closes) < half).any()
    return out


def para_flip_trials(p: float, n_closes: int, threshold: int, trials: int, seed: int = 0) -> np.ndarray:
    """Per trial: does a victim cell of ``threshold`` flip under ``n_closes`` single-sided hammers?

    The victim flips when some ``threshold`` consecutive ACTs see no PARA
    refresh of the victim between them, i.e. a run of ``threshold - 1``
    missing closes among the first ``n_closes - 1``.
    """
    half = p / 2
    out = np.zeros(trials, dtype=bool)
    if n_closes < threshold:
        return out
    need = threshold - 1
    for i in range(trials):
        hits = np.flatnonzero(_trial_draws(seed, i, n_closes)[: n_closes - 1] < half)
        edges = np.concatenate(([-1], hits, [n_closes - 1]))
        out[i] = int(np.diff(edges).max()) - 1 >= need
    return out
