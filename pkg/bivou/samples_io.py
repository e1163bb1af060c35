"""CSV codec for BivariateSample: header `s,z1,z2`, one row per grid point."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import List, Union

from loguru import logger

from bivou.core import BivariateSample, SamplingGrid
from bivou.errors import BivouError, SampleIOError

SAMPLE_HEADER: List[str] = ["s", "z1", "z2"]

PathLike = Union[str, Path]


def _fmt(x: float) -> str:
    # repr round-trips a float exactly
    return repr(float(x))


def write_sample_csv(sample: BivariateSample, path: PathLike) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(SAMPLE_HEADER)
            for s, a, b in zip(sample.grid.points, sample.z1, sample.z2):
                w.writerow([_fmt(s), _fmt(a), _fmt(b)])
    except OSError as exc:
        raise SampleIOError(f"cannot write sample: {exc.strerror or exc}", context={"path": str(path)}) from exc
    logger.debug(f"wrote {sample.n} rows to {path}")
    return path


def read_sample_csv(path: PathLike) -> BivariateSample:
    path = Path(path)
    try:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise SampleIOError(f"cannot read sample: {exc.strerror or exc}", context={"path": str(path)}) from exc

    if not rows or [c.strip() for c in rows[0]] != SAMPLE_HEADER:
        raise SampleIOError(f"expected header {','.join(SAMPLE_HEADER)}",
                            context={"path": str(path), "header": rows[0] if rows else []})
    s, z1, z2 = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise SampleIOError("expected 3 columns", context={"path": str(path), "line": lineno})
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise SampleIOError(f"non-numeric value: {exc}", context={"path": str(path), "line": lineno}) from exc
        if not all(math.isfinite(v) for v in vals):
            raise SampleIOError("non-finite value", context={"path": str(path), "line": lineno})
        s.append(vals[0])
        z1.append(vals[1])
        z2.append(vals[2])

    try:
        return BivariateSample(z1, z2, SamplingGrid.from_points(s))
    except BivouError as exc:
        raise SampleIOError(f"invalid sample in {path}: {exc.message}",
                            context={"path": str(path), **exc.context}) from exc
