"""Mixture weights, l1 covers of the probability simplex, and skewness.

A mixture weight is a point of the p-simplex, represented as a plain float64
vector validated by :func:`validate_mixture`.  Covers are the finite grids
used by the model-selection algorithms; ``skewness`` measures how far a
mixture is from the empirical sample proportions, which governs how well
weighted ERM generalizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import ConfigError, DomainCollection

SIMPLEX_TOL = 1e-9


def validate_mixture(lam, p: int | None = None, name: str = "lambda") -> np.ndarray:
    """Validate and return a simplex point as a float64 vector.

    Entries must be nonnegative and sum to 1 within 1e-9.
    """
    arr = np.asarray(lam, dtype=np.float64).ravel()
    if p is not None and arr.shape[0] != p:
        raise ConfigError(f"{name} has length {arr.shape[0]}, expected p={p}")
    if arr.size == 0:
        raise ConfigError(f"{name} must be nonempty")
    if np.any(arr < -SIMPLEX_TOL):
        raise ConfigError(f"{name} has negative entries")
    if abs(arr.sum() - 1.0) > SIMPLEX_TOL:
        raise ConfigError(f"{name} sums to {arr.sum():.12g}, expected 1 within {SIMPLEX_TOL}")
    return np.maximum(arr, 0.0)


@dataclass(frozen=True)
class SimplexCover:
    """A finite grid of simplex points covering the p-simplex in l1 distance.

    Every point of the simplex has a cover point within l1 distance epsilon;
    ``nearest`` returns such a point constructively (with an exact fallback
    scan), which is how the cover property is verified in tests.
    """

    epsilon: float
    points: np.ndarray  # (n_points, p)

    @property
    def p(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    @cached_property
    def _step(self) -> float:
        return self.epsilon / self.p

    @cached_property
    def _cap(self) -> int:
        return int(math.floor(self.p / self.epsilon + 1e-9))

    @cached_property
    def _index_lookup(self) -> dict:
        step = self._step
        idx = {}
        for row in range(self.points.shape[0]):
            key = tuple(int(round(v / step)) for v in self.points[row, :-1])
            idx[key] = row
        return idx

    def nearest(self, lam: np.ndarray) -> tuple[int, float]:
        """Return (row index, l1 distance) of a cover point within epsilon.

        Uses the constructive rounding argument (floor to the grid, then bump
        the largest-deficit coordinates); falls back to an exhaustive scan in
        the rare corner where the greedy witness is not the closest point.
        """
        lam = validate_mixture(lam, self.p)
        if self.p == 1:
            return 0, float(abs(lam[0] - 1.0))
        step, cap = self._step, self._cap
        head = lam[:-1]
        j = np.minimum(np.floor(head / step + 1e-12).astype(np.int64), cap)
        deficits = head - j * step
        total = float(deficits.sum())
        units = int(math.floor(total / step + 1e-12))
        if units > 0:
            bumpable = np.where(j < cap)[0]
            order = bumpable[np.argsort(-deficits[bumpable], kind="stable")]
            j = j.copy()
            j[order[:units]] += 1
        key = tuple(int(v) for v in j)
        row = self._index_lookup.get(key)
        if row is not None:
            dist = float(np.abs(lam - self.points[row]).sum())
            if dist <= self.epsilon + 1e-12:
                return row, dist
        diffs = np.abs(self.points - lam).sum(axis=1)
        row = int(np.argmin(diffs))
        return row, float(diffs[row])


def make_cover(p: int, epsilon: float) -> SimplexCover:
    """Enumerate the grid cover of the p-simplex with l1 radius epsilon.

    The first p-1 coordinates range over multiples of epsilon/p (floor(p/eps)+1
    values); assignments whose partial sum exceeds 1 (beyond 1e-12) are
    discarded and the last coordinate is the remainder, so points lie exactly
    on the simplex.  Distinct index assignments give distinct points, so no
    floating-point deduplication is ever needed beyond the integer grid.
    """
    if p < 1:
        raise ConfigError("p must be >= 1")
    if not (0.0 < epsilon <= 1.0):
        raise ConfigError(f"cover epsilon must be in (0, 1], got {epsilon}")
    if p == 1:
        return SimplexCover(epsilon=epsilon, points=np.ones((1, 1)))
    step = epsilon / p
    cap = int(math.floor(p / epsilon + 1e-9))
    points: list[list[float]] = []
    prefix = [0] * (p - 1)

    def recurse(coord: int, remaining: int) -> None:
        if coord == p - 1:
            head = [idx * step for idx in prefix]
            points.append(head + [1.0 - sum(head)])
            return
        for idx in range(remaining + 1):
            prefix[coord] = idx
            recurse(coord + 1, remaining - idx)

    recurse(0, cap)
    pts = np.array(points, dtype=np.float64)
    # the remainder coordinate can pick up tiny negative float noise
    np.clip(pts, 0.0, None, out=pts)
    return SimplexCover(epsilon=epsilon, points=pts)


def default_cover_epsilon(p: int) -> float:
    """Default cover radius keeping the grid at most a few thousand points."""
    if p <= 4:
        return 0.25
    if p <= 6:
        return 0.5
    raise ConfigError(f"no default cover for p={p}; pass cover.epsilon explicitly (covers for p > 6 blow up combinatorially)")


def skewness(lam, mhat) -> float:
    """sum_k lambda_k^2 / mhat_k, the divergence driving weighted-ERM bounds.

    Always >= 1 on the simplex (Cauchy-Schwarz), with equality iff
    lambda = mhat.  If some lambda_k > 0 where mhat_k = 0 the skewness is
    infinite and math.inf is returned as the distinct signal value.
    """
    lam = validate_mixture(lam, name="lambda")
    mhat = validate_mixture(np.asarray(mhat, dtype=np.float64), lam.shape[0], name="mhat")
    if np.any((lam > 0) & (mhat == 0)):
        return math.inf
    mask = mhat > 0
    return float(np.sum(lam[mask] ** 2 / mhat[mask]))


def mix_weights(lam, coll: DomainCollection) -> np.ndarray:
    """Per-example weights of the mixed empirical distribution.

    Example i of source k gets weight lambda_k / m_k; the concatenation over
    sources (in source order) has total mass 1.
    """
    lam = validate_mixture(lam, coll.p)
    blocks = [np.full(ds.n, lam[k] / ds.n) for k, ds in enumerate(coll.sources)]
    return np.concatenate(blocks)


def save_cover(cover: SimplexCover, path) -> None:
    """Write a cover as CSV, one mixture weight per row."""
    lines = [f"# p={cover.p} epsilon={cover.epsilon:.17g}"]
    for row in cover.points:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_cover(path) -> SimplexCover:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ConfigError(f"{path}: missing cover header")
        fields = dict(tok.split("=", 1) for tok in header.lstrip("# ").split())
        epsilon = float(fields["epsilon"])
        rows = [[float(v) for v in line.strip().split(",")]
                for line in fh if line.strip() and not line.startswith("#")]
    return SimplexCover(epsilon=epsilon, points=np.array(rows, dtype=np.float64))
