"""Session CSV ingestion, emission, downsampling, and flat config files.

CSV contract: UTF-8, comma-separated, header row. Mandatory columns are
`timestamp` (integer Unix seconds, UTC) and `throughput_kbps` (decimal,
converted to Mbit/s by /1000); every other column becomes a categorical
feature named by its header, in header order. Values must not contain
commas — there is no quoting. Rows with a bad timestamp, a non-positive
throughput, or the wrong column count are counted and skipped, never
silently repaired.

Seeded randomness everywhere in this package uses numpy's PCG64 generator,
so identical seeds reproduce identical bytes across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FeatureSchema, SessionRecord

TIMESTAMP_COLUMN = "timestamp"
THROUGHPUT_COLUMN = "throughput_kbps"


class CsvFormatError(ValueError):
    """The file cannot be interpreted under the session CSV contract."""


@dataclass(frozen=True)
class IngestResult:
    records: tuple[SessionRecord, ...]
    schema: FeatureSchema
    skipped: int


def ingest_csv(path, timestamp_column: str = TIMESTAMP_COLUMN,
               throughput_column: str = THROUGHPUT_COLUMN) -> IngestResult:
    """Parse a session CSV; returns records, the derived schema, and how
    many malformed rows were dropped."""
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise CsvFormatError(f"{path}: empty file, expected a header row")
        header = [h.strip() for h in header_line.rstrip("\n").rstrip("\r").split(",")]
        for required in (timestamp_column, throughput_column):
            if required not in header:
                raise CsvFormatError(f"{path}: missing mandatory column {required!r}")
        ts_col = header.index(timestamp_column)
        tp_col = header.index(throughput_column)
        feature_cols = [i for i in range(len(header)) if i not in (ts_col, tp_col)]
        if not feature_cols:
            raise CsvFormatError(f"{path}: no feature columns besides "
                                 f"{timestamp_column!r} and {throughput_column!r}")
        schema = FeatureSchema(tuple(header[i] for i in feature_cols))

        records = []
        skipped = 0
        for line in fh:
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                skipped += 1  # includes values smuggling commas
                continue
            try:
                ts = int(parts[ts_col])
                kbps = float(parts[tp_col])
            except ValueError:
                skipped += 1
                continue
            if not kbps > 0 or not np.isfinite(kbps):
                skipped += 1
                continue
            features = tuple(parts[i] for i in feature_cols)
            records.append(SessionRecord(features, ts, kbps / 1000.0))
    return IngestResult(tuple(records), schema, skipped)


def write_csv(records, schema: FeatureSchema, path) -> None:
    """Emit records in the ingest format (throughput back in kbit/s)."""
    header = list(schema.names) + [TIMESTAMP_COLUMN, THROUGHPUT_COLUMN]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for r in records:
            for v in r.features:
                if "," in v:
                    raise CsvFormatError(f"feature value contains a comma: {v!r}")
            row = list(r.features) + [str(r.timestamp), repr(r.throughput * 1000.0)]
            fh.write(",".join(row) + "\n")


def random_drop(records, rate: float, seed: int) -> list:
    """Independently keep each record with probability 1 - rate.

    Order is preserved; the draw sequence is fixed by the seed (PCG64), so
    the same inputs always survive.
    """
    if not 0 <= rate <= 1:
        raise ValueError(f"drop rate must be in [0, 1]: {rate}")
    records = list(records)
    if rate == 0:
        return records
    rng = np.random.Generator(np.random.PCG64(seed))
    keep = rng.random(len(records)) >= rate
    return [r for r, k in zip(records, keep) if k]


def parse_kv_file(path) -> dict[str, str]:
    """Flat `key = value` file; '#' starts a comment, blank lines ignored."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
