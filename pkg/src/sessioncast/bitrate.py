"""Bitrate ladder selection under a safety margin, and its evaluation.

A selector picks the highest ladder rung at or below alpha times the
predicted throughput. "At or below" is <= throughout — a stream at a bitrate
exactly equal to the throughput is treated as sustainable — and when even
the lowest rung is above the cap, the lowest rung is picked anyway: a player
must play something. Such sessions simply count as rebuffering when the rung
exceeds the actual throughput.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass


@dataclass(frozen=True)
class BitrateLadder:
    rungs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "rungs", tuple(float(r) for r in self.rungs))
        if not self.rungs:
            raise ValueError("ladder needs at least one rung")
        if any(r <= 0 for r in self.rungs):
            raise ValueError(f"rungs must be positive: {self.rungs}")
        if any(a >= b for a, b in zip(self.rungs, self.rungs[1:])):
            raise ValueError(f"rungs must be strictly ascending: {self.rungs}")


# YouTube-recommended encoding bitrates, in Mbit/s.
DEFAULT_LADDER = BitrateLadder((0.016, 0.4, 1.0, 2.5, 5.0, 8.0, 16.0, 35.0))


@dataclass(frozen=True)
class BitrateOutcome:
    session_id: int
    predicted: float
    actual: float
    chosen: float
    good: bool


def select_bitrate(prediction: float, alpha: float,
                   ladder: BitrateLadder = DEFAULT_LADDER) -> float:
    """Highest rung <= alpha * prediction, or the lowest rung if none is."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive: {alpha}")
    cap = alpha * prediction
    i = bisect_right(ladder.rungs, cap)
    return ladder.rungs[i - 1] if i else ladder.rungs[0]


def ideal_bitrate(actual: float, ladder: BitrateLadder = DEFAULT_LADDER,
                  off_ladder: bool = False) -> float:
    """Highest rung <= the actual throughput (the picture-perfect reference).

    off_ladder=True returns the throughput itself, the unconstrained variant
    some summaries quote instead of the ladder-limited one.
    """
    if off_ladder:
        return actual
    return select_bitrate(actual, 1.0, ladder)


def make_outcome(session_id: int, predicted: float, actual: float,
                 alpha: float, ladder: BitrateLadder = DEFAULT_LADDER) -> BitrateOutcome:
    chosen = select_bitrate(predicted, alpha, ladder)
    return BitrateOutcome(session_id, predicted, actual, chosen,
                          good=chosen <= actual)


def evaluate_bitrate(outcomes) -> tuple[float, float]:
    """(average picked bitrate, fraction of sessions with no rebuffering)."""
    if not outcomes:
        raise ValueError("no outcomes to evaluate")
    avg = sum(o.chosen for o in outcomes) / len(outcomes)
    good = sum(1 for o in outcomes if o.good) / len(outcomes)
    return avg, good


def sweep_alpha(predictions, ladder: BitrateLadder, alphas) -> list[tuple[float, float, float]]:
    """(alpha, avg bitrate, good ratio) per safety margin, for a fixed list
    of (predicted, actual) pairs. Traces the aggressiveness tradeoff."""
    if not alphas:
        raise ValueError("no alphas to sweep")
    rows = []
    for alpha in alphas:
        outcomes = [make_outcome(i, p, a, alpha, ladder)
                    for i, (p, a) in enumerate(predictions)]
        avg, good = evaluate_bitrate(outcomes)
        rows.append((alpha, avg, good))
    return rows
