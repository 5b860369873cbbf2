"""Weighted empirical risk minimization: the inner solver of every algorithm.

Squared loss is solved exactly through the weighted ridge normal equations
(the cover loop calls this once per grid point, and exactness sharpens the
equivalence tests downstream); multinomial log loss uses deterministic
full-batch gradient descent.  Both paths assemble their sufficient statistics
domain block by domain block, skipping blocks with zero total weight, so that
training on the mixture weight e_k is bit-identical to training on source k
alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import (
    CLASSIFICATION,
    REGRESSION,
    ConfigError,
    Dataset,
    DomainCollection,
    Hypothesis,
    LossSpec,
    NumericalError,
)
from .simplex import mix_weights, validate_mixture


@dataclass(frozen=True)
class TrainConfig:
    """Deterministic optimizer settings; step_size None means 1/smoothness."""

    max_iters: int = 5000
    tol: float = 1e-8
    step_size: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ConfigError("tol must be > 0")
        if self.step_size is not None and self.step_size <= 0:
            raise ConfigError("step_size must be > 0")


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _weighted_moments(Xa: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Second moments of one weighted block: (sum w xx^T, sum w x y, sum w y^2)."""
    Xw = Xa * w[:, None]
    return Xa.T @ Xw, Xw.T @ y, float(w @ (y * y))


def _split_blocks(weights: np.ndarray, sizes) -> list[np.ndarray]:
    out, at = [], 0
    for n in sizes:
        out.append(weights[at:at + n])
        at += n
    return out


def _project_ball(theta: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.linalg.norm(theta))
    if norm > radius:
        return theta * (radius / norm)
    return theta


def _solve_ridge(G: np.ndarray, c: np.ndarray, reg: float, B: float) -> Hypothesis:
    d = G.shape[0] - 1
    A = G.copy()
    if reg > 0:
        A[np.arange(d), np.arange(d)] += reg  # intercept is never regularized
    try:
        cho = scipy.linalg.cho_factor(A, check_finite=False)
        diag = np.abs(np.diag(cho[0]))
        # LAPACK can slide through an exactly singular matrix on a tiny pivot
        if not np.all(np.isfinite(diag)) or diag.min() ** 2 <= 1e-12 * diag.max() ** 2:
            raise NumericalError(
                "singular weighted normal equations; set regularization > 0"
                if reg == 0 else
                "ill-conditioned weighted normal equations despite regularization")
        theta = scipy.linalg.cho_solve(cho, c, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        if reg == 0:
            raise NumericalError(
                "singular weighted normal equations; set regularization > 0") from exc
        raise NumericalError(f"weighted ridge solve failed: {exc}") from exc
    theta = _project_ball(theta, B)
    return Hypothesis(weights=theta[:d], intercept=float(theta[d]), task=REGRESSION)


def _train_blocks(datasets: list[Dataset], block_weights: list[np.ndarray],
                  loss: LossSpec, cfg: TrainConfig) -> Hypothesis:
    task = datasets[0].task
    if loss.kind == "zero-one":
        raise ConfigError("zero-one loss is evaluation-only; train with squared or multinomial-log")
    if loss.kind == "squared":
        if task != REGRESSION:
            raise ConfigError("squared loss training requires regression data")
        d = datasets[0].d
        G = np.zeros((d + 1, d + 1))
        c = np.zeros(d + 1)
        for ds, w in zip(datasets, block_weights):
            if not np.any(w):
                continue
            Gk, ck, _ = _weighted_moments(_augment(ds.X), ds.y, w)
            G += Gk
            c += ck
        return _solve_ridge(G, c, loss.regularization, loss.norm_ball_B)
    return _train_logloss(datasets, block_weights, loss, cfg)


def _train_logloss(datasets, block_weights, loss: LossSpec, cfg: TrainConfig) -> Hypothesis:
    if datasets[0].task != CLASSIFICATION:
        raise ConfigError("multinomial-log loss training requires classification data")
    d, K = datasets[0].d, datasets[0].n_classes
    blocks = [(ds, w) for ds, w in zip(datasets, block_weights) if np.any(w)]
    reg = loss.regularization

    if cfg.step_size is not None:
        step = cfg.step_size
    else:
        # softmax cross-entropy curvature is at most (1/2) sum_i w_i x x^T
        S = np.zeros((d + 1, d + 1))
        for ds, w in blocks:
            Xa = _augment(ds.X)
            S += Xa.T @ (Xa * w[:, None])
        smooth = 0.5 * float(np.linalg.eigvalsh(S)[-1]) + 2.0 * reg
        step = 1.0 / max(smooth, 1e-12)

    W = np.zeros((K, d))
    b = np.zeros(K)
    onehots = [np.eye(K)[ds.y.astype(np.int64)] for ds, _ in blocks]
    for _ in range(cfg.max_iters):
        gW = 2.0 * reg * W
        gb = np.zeros(K)
        for (ds, w), Y in zip(blocks, onehots):
            Z = ds.X @ W.T + b
            Z -= Z.max(axis=1, keepdims=True)
            P = np.exp(Z)
            P /= P.sum(axis=1, keepdims=True)
            R = (P - Y) * w[:, None]
            gW += R.T @ ds.X
            gb += R.sum(axis=0)
        gnorm = np.sqrt(float(np.sum(gW * gW) + np.sum(gb * gb)))
        if gnorm <= cfg.tol:
            break
        W -= step * gW
        b -= step * gb
    theta = _project_ball(np.concatenate([W.ravel(), b]), loss.norm_ball_B)
    return Hypothesis(weights=theta[:K * d].reshape(K, d), intercept=theta[K * d:], task=CLASSIFICATION)


def train_weighted(coll: DomainCollection, weights: np.ndarray, loss: LossSpec,
                   cfg: TrainConfig | None = None) -> Hypothesis:
    """Minimize the weighted empirical loss over sources plus ridge penalty.

    weights are per-example over the concatenation of the source datasets in
    order, nonnegative, summing to 1.
    """
    cfg = cfg or TrainConfig()
    w = np.asarray(weights, dtype=np.float64)
    total = sum(ds.n for ds in coll.sources)
    if w.shape != (total,):
        raise ConfigError(f"weights length {w.shape[0] if w.ndim == 1 else w.shape} != total source examples {total}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ConfigError("weights must be nonnegative and sum to 1 (within 1e-9)")
    blocks = _split_blocks(w, [ds.n for ds in coll.sources])
    return _train_blocks(list(coll.sources), blocks, loss, cfg)


def train_on_mixture(coll: DomainCollection, lam, loss: LossSpec,
                     cfg: TrainConfig | None = None) -> Hypothesis:
    """Train on the mixed empirical distribution given a mixture weight."""
    return train_weighted(coll, mix_weights(lam, coll), loss, cfg)


def train_dataset(ds: Dataset, loss: LossSpec, cfg: TrainConfig | None = None) -> Hypothesis:
    """Unweighted ERM on one dataset (uniform weights)."""
    return _train_blocks([ds], [np.full(ds.n, 1.0 / ds.n)], loss, cfg or TrainConfig())


class MixtureSolver:
    """Per-source second moments, precomputed once per collection.

    After the O(m d^2) setup, the exact weighted ridge solution for any
    mixture weight costs O(p d^2 + d^3), and per-source quadratic losses of
    any hypothesis cost O(p d^2).  Quadratic-form losses ignore the clip at
    bound_M, so they are only used inside optimization loops; reported losses
    are always recomputed per-example.  Squared loss / regression only.
    """

    def __init__(self, coll: DomainCollection, loss: LossSpec, include_target: bool = True):
        if coll.task != REGRESSION or loss.kind != "squared":
            raise ConfigError("MixtureSolver supports squared-loss regression only")
        self.loss = loss
        self.p = coll.p
        self.d = coll.d
        self.G = np.zeros((coll.p, coll.d + 1, coll.d + 1))
        self.c = np.zeros((coll.p, coll.d + 1))
        self.q = np.zeros(coll.p)
        for k, ds in enumerate(coll.sources):
            self.G[k], self.c[k], self.q[k] = _weighted_moments(
                _augment(ds.X), ds.y, np.full(ds.n, 1.0 / ds.n))
        self.target_stats = None
        if include_target:
            t = coll.target
            self.target_stats = _weighted_moments(_augment(t.X), t.y, np.full(t.n, 1.0 / t.n))

    def solve(self, lam) -> Hypothesis:
        lam = validate_mixture(lam, self.p)
        live = np.where(lam > 0)[0]
        G = np.einsum("k,kij->ij", lam[live], self.G[live])
        c = lam[live] @ self.c[live]
        return _solve_ridge(G, c, self.loss.regularization, self.loss.norm_ball_B)

    def source_losses(self, theta: np.ndarray) -> np.ndarray:
        """Unclipped quadratic empirical loss of parameters theta on each source."""
        Gt = self.G @ theta
        return np.einsum("i,ki->k", theta, Gt) - 2.0 * (self.c @ theta) + self.q

    def mixture_loss(self, theta: np.ndarray, lam: np.ndarray) -> float:
        return float(lam @ self.source_losses(theta))

    def target_loss(self, theta: np.ndarray) -> float:
        G0, c0, q0 = self.target_stats
        return float(theta @ (G0 @ theta) - 2.0 * (c0 @ theta) + q0)

    def target_grad(self, theta: np.ndarray) -> np.ndarray:
        G0, c0, _ = self.target_stats
        return 2.0 * (G0 @ theta - c0)

    def mixture_grad(self, theta: np.ndarray, lam: np.ndarray) -> np.ndarray:
        live = np.where(lam > 0)[0]
        G = np.einsum("k,kij->ij", lam[live], self.G[live])
        c = lam[live] @ self.c[live]
        return 2.0 * (G @ theta - c)

    def regularized_mixture_loss(self, theta: np.ndarray, lam: np.ndarray) -> float:
        w = theta[:-1]
        return self.mixture_loss(theta, lam) + self.loss.regularization * float(w @ w)

    def reg_grad(self, theta: np.ndarray) -> np.ndarray:
        g = 2.0 * self.loss.regularization * theta
        g[-1] = 0.0
        return g


def hypothesis_theta(h: Hypothesis) -> np.ndarray:
    """Regression parameters as the augmented vector (w, b)."""
    return np.concatenate([h.weights, [float(h.intercept)]])


def theta_hypothesis(theta: np.ndarray) -> Hypothesis:
    return Hypothesis(weights=theta[:-1], intercept=float(theta[-1]), task=REGRESSION)


# ---------------------------------------------------------------------------
# Model file: line 1 `msa-model v1`, line 2 task/dims, then decimal parameter
# rows at 17 significant digits (bit-exact round trip).
# ---------------------------------------------------------------------------

def save_model(h: Hypothesis, path) -> None:
    lines = ["msa-model v1"]
    if h.task == REGRESSION:
        lines.append(f"task=regression d={h.d} K=1")
        lines.append(",".join(f"{v:.17g}" for v in h.weights))
        lines.append(f"{float(h.intercept):.17g}")
    else:
        lines.append(f"task=classification d={h.d} K={h.n_classes}")
        for row in h.weights:
            lines.append(",".join(f"{v:.17g}" for v in row))
        lines.append(",".join(f"{v:.17g}" for v in np.asarray(h.intercept)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> Hypothesis:
    with open(path, "r", encoding="utf-8") as fh:
        magic = fh.readline().strip()
        if magic != "msa-model v1":
            raise ConfigError(f"{path}: not a v1 model file (got {magic!r})")
        fields = dict(tok.split("=", 1) for tok in fh.readline().strip().split())
        task, d, k = fields["task"], int(fields["d"]), int(fields["K"])
        rows = [line.strip() for line in fh if line.strip()]
    if task == REGRESSION:
        if len(rows) != 2:
            raise ConfigError(f"{path}: expected 2 parameter rows, got {len(rows)}")
        w = np.array([float(v) for v in rows[0].split(",")])
        if w.shape != (d,):
            raise ConfigError(f"{path}: weight row has wrong length")
        return Hypothesis(weights=w, intercept=float(rows[1]), task=REGRESSION)
    if len(rows) != k + 1:
        raise ConfigError(f"{path}: expected {k + 1} parameter rows, got {len(rows)}")
    W = np.array([[float(v) for v in row.split(",")] for row in rows[:k]])
    b = np.array([float(v) for v in rows[k].split(",")])
    if W.shape != (k, d) or b.shape != (k,):
        raise ConfigError(f"{path}: parameter rows have wrong shape")
    return Hypothesis(weights=W, intercept=b, task=CLASSIFICATION)
