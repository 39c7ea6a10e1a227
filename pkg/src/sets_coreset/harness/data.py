"""Grouped-point CSV ingestion and synthetic generators."""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from ..core import InvalidInputError, MSet, SetFamily, as_rng

logger = logging.getLogger(__name__)


def _parse_floats(fields):
    try:
        return [float(x) for x in fields]
    except ValueError:
        return None


def load_grouped_csv(path, d: int | None = None) -> SetFamily:
    """Read rows ``set_id,x_1,...,x_d`` into a family, grouped by ``set_id``.

    Sets appear in order of first appearance. A non-numeric first row is taken
    as a header. Repeated points inside one set are dropped with a warning.
    """
    path = Path(path)
    groups: dict[str, list[tuple[float, ...]]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not f.strip() for f in row):
                continue
            coords = _parse_floats(row[1:])
            if coords is None or len(row) < 2:
                if lineno == 1 and not groups:
                    continue  # header
                raise InvalidInputError(f"{path}:{lineno}: malformed row {row!r}")
            if d is None:
                d = len(coords)
            if len(coords) != d:
                raise InvalidInputError(f"{path}:{lineno}: expected {d} coordinates, got {len(coords)}")
            if not np.all(np.isfinite(coords)):
                raise InvalidInputError(f"{path}:{lineno}: non-finite coordinate")
            groups.setdefault(row[0].strip(), []).append(tuple(coords))
    if not groups:
        raise InvalidInputError(f"{path}: no data rows")
    sets = []
    for sid, pts in groups.items():
        unique = list(dict.fromkeys(pts))
        if len(unique) != len(pts):
            logger.warning("set %r: dropped %d duplicate point(s)", sid, len(pts) - len(unique))
        sets.append(MSet(np.array(unique), id=sid))
    return SetFamily(tuple(sets))


def write_family_csv(F: SetFamily, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["set_id"] + [f"x{j + 1}" for j in range(F.dim)])
        for s in F.sets:
            for p in s.points:
                writer.writerow([s.id] + [repr(float(x)) for x in p])


def gen_two_circles(n1: int = 990, n2: int = 10, r: float = 1e6, rng=None, far: float = 30.0) -> SetFamily:
    """Pairs on two unit circles, each paired with the point at distance ``far``.

    The first ``n1`` pairs are centered at the origin, the next ``n2`` at ``(r, 0)``;
    every pair is ``{c + u, c + far * u}`` for a uniformly random unit vector ``u``.
    """
    if n1 < 1 or n2 < 1:
        raise InvalidInputError("n1 and n2 must be >= 1")
    rng = as_rng(rng)
    theta = rng.uniform(0.0, 2 * np.pi, size=n1 + n2)
    u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    centers = np.zeros((n1 + n2, 2))
    centers[n1:, 0] = r
    near = centers + u
    farp = centers + far * u
    return SetFamily.from_arrays(
        (np.stack([a, b]) for a, b in zip(near, farp)),
        ids=[f"c1_{i}" for i in range(n1)] + [f"c2_{i}" for i in range(n2)],
    )


def gen_planted(n: int, m: int, d: int, inlier_frac: float = 0.6, scatter: float = 100.0, rng=None) -> SetFamily:
    """Sets fully inside the unit ball, plus outlier sets at distance >= ``scatter``."""
    rng = as_rng(rng)
    n_in = int(round(inlier_frac * n))
    arrays = []
    for i in range(n):
        dirs = rng.normal(size=(m, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        if i < n_in:
            radius = rng.uniform(0, 1, size=(m, 1)) ** (1 / d)
        else:
            radius = scatter * (1 + rng.uniform(0, 1, size=(m, 1)))
        arrays.append(dirs * radius)
    return SetFamily.from_arrays(arrays)


def gen_blobs(n: int, m: int, d: int, centers: int = 3, spread: float = 1.0, box: float = 10.0, rng=None) -> SetFamily:
    """Each set holds ``m`` points, each near a randomly chosen blob center."""
    rng = as_rng(rng)
    mu = rng.uniform(-box, box, size=(centers, d))
    arrays = [mu[rng.integers(centers, size=m)] + spread * rng.normal(size=(m, d)) for _ in range(n)]
    return SetFamily.from_arrays(arrays)
