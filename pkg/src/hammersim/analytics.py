"""Closed-form companions to the simulator."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def _window_ns(window_ms) -> Fraction:
    return Fraction(str(window_ms)) * 1_000_000


def para_survival_prob(p: float, n: int) -> float:
    """Probability that an interior victim escapes PARA over ``n`` one-sided aggressor closes.

    Each close refreshes the victim with probability ``p / 2``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if n < 0:
        raise ValueError("n must be >= 0")
    return math.exp(n * math.log1p(-p / 2)) if p < 1 else 0.5 ** n


def para_survival_prob_double_sided(p: float, n_per_side: int) -> float:
    """Same for double-sided hammering: ``2 * n_per_side`` closes, each hitting the victim with ``p / 2``."""
    return para_survival_prob(p, 2 * n_per_side)


def para_flip_prob(p: float, n: int, threshold: int) -> float:
    """Exact probability that a cell of ``threshold`` flips under ``n`` single-sided closes.

    A flip needs a run of ``threshold - 1`` consecutive closes that miss the
    victim, among the first ``n - 1`` closes. Computed with the standard
    no-long-run recurrence.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    if n < threshold:
        return 0.0
    run = threshold - 1
    m = n - 1
    if run == 0:
        return 1.0
    q = 1.0 - p / 2
    hit = p / 2
    # state[j]: probability of a current run of j misses and no run of `run` yet
    state = np.zeros(run)
    state[0] = 1.0
    for _ in range(m):
        total = state.sum()
        state[1:] = state[:-1] * q
        state[0] = total * hit
    return float(1.0 - state.sum())


def para_flip_union_bound(p: float, n: int, threshold: int) -> float:
    """Union bound ``(n - threshold + 1) * (1 - p/2)^(threshold - 1)`` on the flip probability, capped at 1."""
    if n < threshold:
        return 0.0
    return min(1.0, (n - threshold + 1) * (1.0 - p / 2) ** (threshold - 1))


def max_activations_per_window(window_ms: float, tRC_ns: float, k: int = 1) -> int:
    """Hammer budget against one victim between its refreshes: ``floor((window / k) / tRC)``."""
    if window_ms <= 0 or tRC_ns <= 0 or k <= 0:
        raise ValueError("inputs must be positive")
    if k == math.inf:
        return 0
    return math.floor(_window_ns(window_ms) / (Fraction(k) * Fraction(str(tRC_ns))))


def required_refresh_multiplier(window_ms: float, tRC_ns: float, t_min: int) -> int:
    """Smallest integer k whose hammer budget falls below ``t_min``."""
    if t_min < 1:
        raise ValueError("t_min must be >= 1")
    budget = _window_ns(window_ms) / Fraction(str(tRC_ns))
    # floor(budget / k) < t_min  <=>  budget / k < t_min  <=>  k > budget / t_min
    return math.floor(budget / t_min) + 1


def refresh_time_overhead(rows: int, window_ms: float, tRFC_row_ns: float, k: int = 1) -> float:
    """Fraction of wall time spent refreshing: ``k * rows * tRFC_row / window``."""
    if rows < 0 or window_ms <= 0 or tRFC_row_ns <= 0 or k <= 0:
        raise ValueError("inputs must be positive")
    return float(Fraction(k) * rows * Fraction(str(tRFC_row_ns)) / _window_ns(window_ms))


FORMULAS = {
    "para_survival": (para_survival_prob, ("p", "N")),
    "para_flip": (para_flip_prob, ("p", "N", "T")),
    "max_activations": (max_activations_per_window, ("window_ms", "tRC_ns", "k")),
    "required_multiplier": (required_refresh_multiplier, ("window_ms", "tRC_ns", "T_min")),
    "refresh_overhead": (refresh_time_overhead, ("rows", "window_ms", "tRFC_row_ns", "k")),
}
