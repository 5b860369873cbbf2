"""Estimation of the largest loss gap any hypothesis can exhibit between two
empirical distributions (the label-discrepancy of the hypothesis class).

Both methods return certified lower bounds: the reported value is always the
exactly recomputed gap |L_a(witness) - L_b(witness)| of the returned witness.
``ascent`` runs multi-restart projected gradient ascent on the squared gap
inside the parameter norm ball; ``grid-oracle`` scans an exhaustive parameter
lattice and is the reference oracle on tiny instances.  Loss clipping at
bound_M keeps every estimate finite even for unbounded raw losses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CLASSIFICATION,
    REGRESSION,
    ConfigError,
    Dataset,
    DimensionError,
    DomainCollection,
    Hypothesis,
    LossSpec,
    TractabilityError,
    example_losses,
)
from .simplex import validate_mixture

_GRID_LIMIT = 4_000_000


@dataclass(frozen=True)
class DiscEstimate:
    """A witness-certified lower bound on the discrepancy."""

    value: float
    method: str
    witness: Hypothesis
    restarts_used: int


def _theta_to_hypothesis(theta: np.ndarray, task: str, d: int, k: int, with_intercept: bool) -> Hypothesis:
    if task == REGRESSION:
        if with_intercept:
            return Hypothesis(weights=theta[:d], intercept=float(theta[d]), task=task)
        return Hypothesis(weights=theta, intercept=0.0, task=task)
    if with_intercept:
        return Hypothesis(weights=theta[:k * d].reshape(k, d), intercept=theta[k * d:], task=task)
    return Hypothesis(weights=theta.reshape(k, d), intercept=np.zeros(k), task=task)


def _n_params(task: str, d: int, k: int, with_intercept: bool) -> int:
    if task == REGRESSION:
        return d + (1 if with_intercept else 0)
    return k * d + (k if with_intercept else 0)


def parameter_grid(task: str, d: int, k: int, B: float, resolution: float,
                   with_intercept: bool = True) -> np.ndarray:
    """Anchored lattice of parameter vectors inside the norm ball.

    Axis values are the multiples of `resolution` in [-B, B] (so boundary
    points at exact multiples, including +-B when B is a multiple, are on the
    lattice, and enlarging B only ever adds points).  Rows with norm > B are
    dropped.
    """
    if resolution <= 0:
        raise ConfigError("grid resolution must be > 0")
    n = _n_params(task, d, k, with_intercept)
    J = int(math.floor(B / resolution + 1e-9))
    axis = np.arange(-J, J + 1, dtype=np.float64) * resolution
    if len(axis) ** n > _GRID_LIMIT:
        raise TractabilityError(
            f"parameter lattice would have {len(axis)}^{n} points; coarsen the resolution")
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    thetas = np.stack([g.ravel() for g in grids], axis=1)
    keep = np.einsum("ij,ij->i", thetas, thetas) <= B * B + 1e-12
    return thetas[keep]


def grid_losses(thetas: np.ndarray, data: Dataset, loss: LossSpec,
                with_intercept: bool = True, chunk: int = 4096) -> np.ndarray:
    """Mean clipped loss of every parameter row on a dataset, vectorized."""
    n_rows = thetas.shape[0]
    out = np.empty(n_rows)
    d, k = data.d, data.n_classes
    if _n_params(data.task, d, k, with_intercept) != thetas.shape[1]:
        raise DimensionError(_n_params(data.task, d, k, with_intercept), thetas.shape[1],
                             "parameter dimension")
    for lo in range(0, n_rows, chunk):
        hi = min(lo + chunk, n_rows)
        T = thetas[lo:hi]
        if data.task == REGRESSION:
            if loss.kind != "squared":
                raise ConfigError("regression grids support squared loss only")
            preds = T[:, :d] @ data.X.T
            if with_intercept:
                preds += T[:, d][:, None]
            raw = (preds - data.y[None, :]) ** 2
            out[lo:hi] = np.minimum(raw, loss.bound_M).mean(axis=1)
        else:
            W = T[:, :k * d].reshape(-1, k, d)
            b = T[:, k * d:] if with_intercept else np.zeros((hi - lo, k))
            Z = np.einsum("mkd,nd->mnk", W, data.X) + b[:, None, :]
            Z -= Z.max(axis=2, keepdims=True)
            P = np.exp(Z)
            P /= P.sum(axis=2, keepdims=True)
            if loss.kind == "zero-one":
                out[lo:hi] = (P.argmax(axis=2) != data.y[None, :]).mean(axis=1)
            else:
                picked = P[:, np.arange(data.n), data.y.astype(np.int64)]
                raw = -np.log(np.maximum(picked, 1e-300))
                out[lo:hi] = np.minimum(raw, loss.bound_M).mean(axis=1)
    return out


def _check_pair(a: Dataset, b: Dataset) -> None:
    if a.d != b.d:
        raise DimensionError(a.d, b.d)
    if a.task != b.task or (a.task == CLASSIFICATION and a.n_classes != b.n_classes):
        raise ConfigError("datasets must share task and K")


def _clipped_gap(theta, a: Dataset, b: Dataset, loss: LossSpec, with_intercept: bool) -> float:
    h = _theta_to_hypothesis(theta, a.task, a.d, a.n_classes, with_intercept)
    return float(example_losses(h, a, loss).mean() - example_losses(h, b, loss).mean())


def _quad_stats(data: Dataset, with_intercept: bool):
    X = np.hstack([data.X, np.ones((data.n, 1))]) if with_intercept else data.X
    n = data.n
    return X.T @ X / n, X.T @ data.y / n, float(data.y @ data.y) / n


def _ascent_squared(a, b, loss, restarts, iters, seed, with_intercept):
    Ga, ca, qa = _quad_stats(a, with_intercept)
    Gb, cb, qb = _quad_stats(b, with_intercept)
    dG, dc, dq = Ga - Gb, ca - cb, qa - qb
    B = loss.norm_ball_B
    n = dG.shape[0]

    def quad_gap(theta):
        return float(theta @ (dG @ theta) - 2.0 * (dc @ theta) + dq)

    snap_every = max(1, iters // 10)
    candidates = [np.zeros(n)]
    if np.linalg.norm(dc) > 0:
        # exact maximizers of the affine part of the gap sit on the boundary
        candidates.append(B * dc / np.linalg.norm(dc))
        candidates.append(-B * dc / np.linalg.norm(dc))
    for r in range(restarts + 1):
        if r == 0:
            theta = np.zeros(n)
        else:
            rng = np.random.default_rng([seed, 7919, r])
            u = rng.normal(size=n)
            theta = u / np.linalg.norm(u) * B * rng.uniform() ** (1.0 / n)
        best_theta, best_gap = theta.copy(), abs(quad_gap(theta))
        for t in range(iters):
            gap = quad_gap(theta)
            grad = 2.0 * gap * (2.0 * (dG @ theta - dc))
            gn = np.linalg.norm(grad)
            if gn < 1e-15:
                # flat (e.g. at zero): nudge along the linear term
                grad = -2.0 * dc if np.linalg.norm(dc) > 0 else np.ones(n)
                gn = np.linalg.norm(grad)
            theta = theta + (0.3 * B / math.sqrt(1.0 + t)) * grad / gn
            nrm = np.linalg.norm(theta)
            if nrm > B:
                theta *= B / nrm
            g = abs(quad_gap(theta))
            if g > best_gap:
                best_gap, best_theta = g, theta.copy()
            if (t + 1) % snap_every == 0:
                candidates.append(theta.copy())
        candidates.append(best_theta)
        candidates.append(theta)
    vals = [abs(_clipped_gap(t, a, b, loss, with_intercept)) for t in candidates]
    i = int(np.argmax(vals))
    return candidates[i], vals[i]


def _ascent_logloss(a, b, loss, restarts, iters, seed, with_intercept):
    d, k = a.d, a.n_classes
    B = loss.norm_ball_B
    n = _n_params(CLASSIFICATION, d, k, with_intercept)

    def grad_mean_loss(theta, data):
        h = _theta_to_hypothesis(theta, CLASSIFICATION, d, k, with_intercept)
        P = h.predict_batch(data.X)
        picked = P[np.arange(data.n), data.y.astype(np.int64)]
        live = (-np.log(np.maximum(picked, 1e-300)) < loss.bound_M).astype(np.float64)
        R = (P - np.eye(k)[data.y.astype(np.int64)]) * (live / data.n)[:, None]
        gW = R.T @ data.X
        if with_intercept:
            return np.concatenate([gW.ravel(), R.sum(axis=0)])
        return gW.ravel()

    best_theta, best_val = np.zeros(n), abs(_clipped_gap(np.zeros(n), a, b, loss, with_intercept))
    for r in range(restarts + 1):
        if r == 0:
            theta = np.zeros(n)
        else:
            rng = np.random.default_rng([seed, 104729, r])
            u = rng.normal(size=n)
            theta = u / np.linalg.norm(u) * B * rng.uniform() ** (1.0 / n)
        for t in range(iters):
            gap = _clipped_gap(theta, a, b, loss, with_intercept)
            grad = gap * (grad_mean_loss(theta, a) - grad_mean_loss(theta, b))
            gn = np.linalg.norm(grad)
            if gn < 1e-15:
                break
            theta = theta + (0.3 * B / math.sqrt(1.0 + t)) * grad / gn
            nrm = np.linalg.norm(theta)
            if nrm > B:
                theta *= B / nrm
            val = abs(_clipped_gap(theta, a, b, loss, with_intercept))
            if val > best_val:
                best_val, best_theta = val, theta.copy()
    return best_theta, best_val


def disc_estimate(a: Dataset, b: Dataset, loss: LossSpec, method: str = "ascent",
                  restarts: int = 16, iters: int = 500, resolution: float = 1e-2,
                  seed: int = 0, with_intercept: bool = True) -> DiscEstimate:
    """Estimate max_h |L_a(h) - L_b(h)| over the norm-ball-constrained class.

    Returns a lower bound certified by its witness; the stored value is the
    exact clipped-loss gap of the witness.  with_intercept=False searches the
    purely linear class (intercept pinned at zero).
    """
    _check_pair(a, b)
    if method == "grid-oracle":
        if a.d > 3 or (a.task == CLASSIFICATION and a.n_classes > 2):
            raise TractabilityError("grid-oracle needs d <= 3 and K <= 2")
        thetas = parameter_grid(a.task, a.d, a.n_classes, loss.norm_ball_B, resolution, with_intercept)
        gaps = grid_losses(thetas, a, loss, with_intercept) - grid_losses(thetas, b, loss, with_intercept)
        i = int(np.argmax(np.abs(gaps)))
        witness = _theta_to_hypothesis(thetas[i], a.task, a.d, a.n_classes, with_intercept)
        return DiscEstimate(value=float(abs(gaps[i])), method=method, witness=witness, restarts_used=0)
    if method != "ascent":
        raise ConfigError(f"unknown discrepancy method {method!r}")
    if loss.kind == "zero-one":
        raise ConfigError("ascent needs a differentiable loss; use grid-oracle for zero-one")
    if loss.kind == "squared":
        theta, val = _ascent_squared(a, b, loss, restarts, iters, seed, with_intercept)
    else:
        theta, val = _ascent_logloss(a, b, loss, restarts, iters, seed, with_intercept)
    witness = _theta_to_hypothesis(theta, a.task, a.d, a.n_classes, with_intercept)
    return DiscEstimate(value=val, method="ascent", witness=witness, restarts_used=restarts)


def pairwise_disc_matrix(coll: DomainCollection, loss: LossSpec, method: str = "ascent",
                         restarts: int = 16, iters: int = 500, resolution: float = 1e-2,
                         seed: int = 0, with_intercept: bool = True) -> np.ndarray:
    """Vector of discrepancy estimates between each source and the target."""
    return np.array([
        disc_estimate(ds, coll.target, loss, method=method, restarts=restarts, iters=iters,
                      resolution=resolution, seed=seed * 1_000_003 + k,
                      with_intercept=with_intercept).value
        for k, ds in enumerate(coll.sources)
    ])


def disc_mixture_estimate(coll: DomainCollection, lam, loss: LossSpec,
                          restarts: int = 8, iters: int = 300, seed: int = 0,
                          with_intercept: bool = True) -> DiscEstimate:
    """Ascent estimate of the discrepancy between the lambda-mixed sources
    and the target (squared loss)."""
    if loss.kind != "squared":
        raise ConfigError("mixture discrepancy is implemented for squared loss")
    lam = validate_mixture(lam, coll.p)
    stats = [_quad_stats(ds, with_intercept) for ds in coll.sources]
    Gm = sum(l * s[0] for l, s in zip(lam, stats))
    cm = sum(l * s[1] for l, s in zip(lam, stats))
    qm = sum(l * s[2] for l, s in zip(lam, stats))
    G0, c0, q0 = _quad_stats(coll.target, with_intercept)
    dG, dc, dq = Gm - G0, cm - c0, qm - q0
    B = loss.norm_ball_B
    n = dG.shape[0]

    def quad_gap(theta):
        return float(theta @ (dG @ theta) - 2.0 * (dc @ theta) + dq)

    def exact_gap(theta):
        h = _theta_to_hypothesis(theta, REGRESSION, coll.d, 0, with_intercept)
        mixed = sum(l * float(example_losses(h, ds, loss).mean())
                    for l, ds in zip(lam, coll.sources))
        return mixed - float(example_losses(h, coll.target, loss).mean())

    candidates = [np.zeros(n)]
    for r in range(1, restarts + 1):
        rng = np.random.default_rng([seed, 15485863, r])
        u = rng.normal(size=n)
        theta = u / np.linalg.norm(u) * B * rng.uniform() ** (1.0 / n)
        best_theta, best_gap = theta.copy(), abs(quad_gap(theta))
        for t in range(iters):
            gap = quad_gap(theta)
            grad = 2.0 * gap * (2.0 * (dG @ theta - dc))
            gn = np.linalg.norm(grad)
            if gn < 1e-15:
                break
            theta = theta + (0.3 * B / math.sqrt(1.0 + t)) * grad / gn
            nrm = np.linalg.norm(theta)
            if nrm > B:
                theta *= B / nrm
            if abs(quad_gap(theta)) > best_gap:
                best_gap, best_theta = abs(quad_gap(theta)), theta.copy()
        candidates.extend([best_theta, theta])
    vals = [abs(exact_gap(t)) for t in candidates]
    i = int(np.argmax(vals))
    witness = _theta_to_hypothesis(candidates[i], REGRESSION, coll.d, 0, with_intercept)
    return DiscEstimate(value=vals[i], method="ascent", witness=witness, restarts_used=restarts)
