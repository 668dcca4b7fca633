"""Shared oracles and corpus builders.

The oracles deliberately reimplement the math from first principles
(linear scans, statistics.median, plain Python sums) so the tests never
share a code path with what they are checking.
"""

import statistics

from sessioncast.core import SessionRecord, matches
from sessioncast.history import estimation_set


def scan_aggregate(records, model, target):
    ordered = sorted(records, key=lambda r: r.timestamp)
    return [r for r in ordered if matches(model, r, target)]


def oracle_empirical_error(records, model, est_set, k=1.0):
    """Mean normalized absolute error, straight from the definitions.
    None when the estimation set is empty or any aggregate is empty."""
    if not est_set:
        return None
    total = 0.0
    for s in est_set:
        agg = scan_aggregate(records, model, s)
        if not agg:
            return None
        p = statistics.median([r.throughput for r in agg]) * k
        total += abs(p - s.throughput) / s.throughput
    return total / len(est_set)


def oracle_best_model(records, index, pool, target, config):
    """Exhaustive argmin over the pool; first position wins ties.
    Returns (pool index or None, error)."""
    est = estimation_set(index, target, config.estimation_features,
                         config.estimation_window)
    if not est:
        return None, None
    best, best_err = None, None
    for i, model in enumerate(pool.models):
        err = oracle_empirical_error(records, model, est)
        if err is None:
            continue
        if best is None or err < best_err:
            best, best_err = i, err
    return best, best_err


def random_corpus(rng, n_records, alphabets, t0, span, tput_lo=0.2, tput_hi=20.0):
    """Records with independently uniform feature values and timestamps."""
    records = []
    for _ in range(n_records):
        features = tuple(rng.choice(a) for a in alphabets)
        ts = t0 + rng.randint(0, span - 1)
        records.append(SessionRecord(features, ts, rng.uniform(tput_lo, tput_hi)))
    return records
