"""Datasets, hypotheses, losses, and empirical-loss evaluation.

Shared vocabulary for every algorithm in the package: one scarce labeled
target dataset plus p plentiful source datasets, affine-linear hypotheses
(regression or softmax classification), and bounded losses.  All types are
immutable after construction and all operations are pure functions, so
everything here is safe to evaluate from multiple threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

REGRESSION = "regression"
CLASSIFICATION = "classification"

LOSS_KINDS = ("squared", "multinomial-log", "zero-one")


class MsaError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(MsaError):
    """Invalid configuration value or unknown configuration key."""


class DimensionError(MsaError):
    """Feature/parameter dimension mismatch; carries expected and actual d."""

    def __init__(self, expected: int, actual: int, what: str = "feature dimension"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} mismatch: expected d={expected}, got d={actual}")


class NumericalError(MsaError):
    """Numerical failure (e.g. singular normal equations)."""


class TractabilityError(MsaError):
    """Operation requested outside its tractable regime (grid oracles)."""


class CalibrationError(MsaError):
    """Generator calibration failed to converge."""


class LabeledExample(NamedTuple):
    features: np.ndarray
    label: float | int


@dataclass(frozen=True)
class Dataset:
    """An empirical distribution: a fixed block of labeled examples.

    Storage is columnar (X of shape (n, d), y of shape (n,)); ``examples()``
    yields the row view.  Regression labels are floats, classification labels
    are class indices in {0..K-1}.
    """

    domain_id: int
    X: np.ndarray
    y: np.ndarray
    task: str
    n_classes: int = 0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        object.__setattr__(self, "X", X)
        if self.domain_id < 0:
            raise ConfigError("domain_id must be >= 0")
        if X.ndim != 2 or X.shape[0] == 0:
            raise ConfigError("dataset must be a nonempty (n, d) array")
        if not np.all(np.isfinite(X)):
            raise ConfigError("features must be finite")
        if self.task == REGRESSION:
            y = np.asarray(self.y, dtype=np.float64)
            if not np.all(np.isfinite(y)):
                raise ConfigError("labels must be finite")
        elif self.task == CLASSIFICATION:
            y = np.asarray(self.y)
            if not np.issubdtype(y.dtype, np.integer):
                yr = np.asarray(self.y, dtype=np.float64)
                if np.any(yr != np.round(yr)):
                    raise ConfigError("classification labels must be integers")
                y = yr.astype(np.int64)
            if self.n_classes < 2:
                raise ConfigError("classification dataset needs n_classes >= 2")
            if np.any(y < 0) or np.any(y >= self.n_classes):
                raise ConfigError("class index out of range [0, K)")
        else:
            raise ConfigError(f"unknown task {self.task!r}")
        if y.shape != (X.shape[0],):
            raise ConfigError("y must have one label per example")
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def examples(self) -> Iterator[LabeledExample]:
        for i in range(self.n):
            yield LabeledExample(self.X[i], self.y[i])


@dataclass(frozen=True)
class DomainCollection:
    """One target dataset plus p source datasets, dimension-compatible."""

    target: Dataset
    sources: tuple[Dataset, ...]
    task: str

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if len(self.sources) < 1:
            raise ConfigError("need at least one source domain (p >= 1)")
        for ds in (self.target, *self.sources):
            if ds.task != self.task:
                raise ConfigError("all datasets must share the collection task")
            if ds.d != self.target.d:
                raise DimensionError(self.target.d, ds.d)
            if self.task == CLASSIFICATION and ds.n_classes != self.target.n_classes:
                raise ConfigError("all datasets must share one K")

    @property
    def p(self) -> int:
        return len(self.sources)

    @property
    def d(self) -> int:
        return self.target.d

    @property
    def n_classes(self) -> int:
        return self.target.n_classes

    @property
    def m0(self) -> int:
        return self.target.n

    @property
    def source_sizes(self) -> np.ndarray:
        return np.array([ds.n for ds in self.sources], dtype=np.int64)

    @property
    def m(self) -> int:
        return int(self.source_sizes.sum())

    @property
    def mhat(self) -> np.ndarray:
        """Empirical proportion of samples per source, (m_1/m, ..., m_p/m)."""
        sizes = self.source_sizes
        return sizes / sizes.sum()


@dataclass(frozen=True)
class LossSpec:
    """Loss kind plus the constants used by algorithms and diagnostics.

    Per-example losses are clipped at bound_M, which keeps the boundedness
    assumption true for raw losses that are unbounded (squared, log) and
    keeps discrepancy estimates finite.  regularization is the ridge
    coefficient applied by training objectives (never by evaluation);
    norm_ball_B constrains the hypothesis parameter norm so that the
    hypothesis class itself is bounded.
    """

    kind: str
    bound_M: float = 1.0
    lipschitz_L: float = 1.0
    strong_convexity_mu: float | None = None
    gradient_bound_G: float = 1.0
    regularization: float = 1e-3
    norm_ball_B: float = 100.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ConfigError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if self.bound_M <= 0:
            raise ConfigError("bound_M must be > 0")
        if self.lipschitz_L <= 0:
            raise ConfigError("lipschitz_L must be > 0")
        if self.gradient_bound_G <= 0:
            raise ConfigError("gradient_bound_G must be > 0")
        if self.regularization < 0:
            raise ConfigError("regularization must be >= 0")
        if self.norm_ball_B <= 0:
            raise ConfigError("norm_ball_B must be > 0")
        if self.strong_convexity_mu is None:
            # the ridge term r*||w||^2 contributes 2r to the objective Hessian
            object.__setattr__(self, "strong_convexity_mu", 2.0 * self.regularization)
        if self.strong_convexity_mu < 0:
            raise ConfigError("strong_convexity_mu must be >= 0")
        if self.regularization > 0 and self.strong_convexity_mu < self.regularization:
            raise ConfigError("strong_convexity_mu must be >= regularization when regularization > 0")

    @property
    def mu(self) -> float:
        return float(self.strong_convexity_mu)


def squared_loss(**kw) -> LossSpec:
    return LossSpec(kind="squared", **kw)


def multinomial_log_loss(**kw) -> LossSpec:
    return LossSpec(kind="multinomial-log", **kw)


def zero_one_loss(**kw) -> LossSpec:
    """Zero-one loss; evaluation only, never a training objective."""
    return LossSpec(kind="zero-one", **kw)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class Hypothesis:
    """Affine-linear predictor.

    Regression: weights (d,), scalar intercept, predict(x) = w.x + b.
    Classification: weights (K, d), intercept (K,), predict(x) = softmax(Wx + b),
    a probability vector over the K classes.
    """

    weights: np.ndarray
    intercept: np.ndarray | float
    task: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if self.task == REGRESSION:
            if w.ndim != 1:
                raise ConfigError("regression weights must be a vector")
            object.__setattr__(self, "intercept", float(self.intercept))
        elif self.task == CLASSIFICATION:
            if w.ndim != 2:
                raise ConfigError("classification weights must be a (K, d) matrix")
            b = np.asarray(self.intercept, dtype=np.float64)
            if b.shape != (w.shape[0],):
                raise ConfigError("classification intercept must have length K")
            object.__setattr__(self, "intercept", b)
        else:
            raise ConfigError(f"unknown task {self.task!r}")

    @property
    def d(self) -> int:
        return self.weights.shape[-1]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0] if self.task == CLASSIFICATION else 0

    def predict(self, x: np.ndarray) -> np.ndarray | float:
        """Predict one example: probability vector (classification) or scalar."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.d:
            raise DimensionError(self.d, x.shape[0] if x.ndim == 1 else -1)
        if self.task == REGRESSION:
            return float(self.weights @ x + self.intercept)
        return _softmax(self.weights @ x + self.intercept)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        """Predict n examples at once: (n,) scalars or (n, K) probability rows."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise DimensionError(self.d, X.shape[1] if X.ndim == 2 else -1)
        if self.task == REGRESSION:
            return X @ self.weights + self.intercept
        return _softmax(X @ self.weights.T + np.asarray(self.intercept))

    def param_vector(self) -> np.ndarray:
        return np.concatenate([self.weights.ravel(), np.atleast_1d(np.asarray(self.intercept, dtype=np.float64))])

    def param_norm(self) -> float:
        return float(np.linalg.norm(self.param_vector()))


def example_loss(loss: LossSpec, prediction, label) -> float:
    """Loss of one prediction against one label, clipped into [0, bound_M].

    zero-one compares argmax(prediction) to the class index; argmax ties are
    broken toward the lowest class index for determinism.
    """
    if loss.kind == "squared":
        raw = (float(prediction) - float(label)) ** 2
    elif loss.kind == "multinomial-log":
        p = np.asarray(prediction, dtype=np.float64)
        raw = -np.log(max(float(p[int(label)]), 1e-300))
    else:  # zero-one
        p = np.asarray(prediction, dtype=np.float64)
        return float(int(np.argmax(p)) != int(label))
    return float(min(raw, loss.bound_M))


def example_losses(h: Hypothesis, data: Dataset, loss: LossSpec) -> np.ndarray:
    """Vector of clipped per-example losses of h on a dataset."""
    _check_compat(h, data, loss)
    pred = h.predict_batch(data.X)
    if loss.kind == "squared":
        raw = (pred - data.y) ** 2
    elif loss.kind == "multinomial-log":
        picked = pred[np.arange(data.n), data.y.astype(np.int64)]
        raw = -np.log(np.maximum(picked, 1e-300))
    else:  # zero-one
        return (np.argmax(pred, axis=1) != data.y).astype(np.float64)
    return np.minimum(raw, loss.bound_M)


def empirical_loss(h: Hypothesis, data: Dataset, loss: LossSpec, weights: np.ndarray | None = None) -> float:
    """Weighted empirical loss sum_i w_i * loss_i; unweighted means w_i = 1/n."""
    per = example_losses(h, data, loss)
    if weights is None:
        return float(per.mean())
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (data.n,):
        raise ConfigError(f"weight vector length {w.shape} does not match n={data.n}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ConfigError("weights must be nonnegative and sum to 1 (within 1e-9)")
    return float(per @ w)


def _check_compat(h: Hypothesis, data: Dataset, loss: LossSpec) -> None:
    if h.task != data.task:
        raise ConfigError("hypothesis task does not match dataset task")
    if data.d != h.d:
        raise DimensionError(h.d, data.d)
    if loss.kind == "squared" and data.task != REGRESSION:
        raise ConfigError("squared loss applies to regression data")
    if loss.kind in ("multinomial-log", "zero-one") and data.task != CLASSIFICATION:
        raise ConfigError(f"{loss.kind} loss applies to classification data")


# ---------------------------------------------------------------------------
# Dataset text format: UTF-8, one example per line, comma-separated decimals,
# label last; header line `# d=<int> task=<task> K=<int>` (K=1 for regression).
# ---------------------------------------------------------------------------

def save_dataset(data: Dataset, path) -> None:
    k = data.n_classes if data.task == CLASSIFICATION else 1
    lines = [f"# d={data.d} task={data.task} K={k}"]
    for i in range(data.n):
        feats = ",".join(f"{v:.17g}" for v in data.X[i])
        if data.task == CLASSIFICATION:
            lines.append(f"{feats},{int(data.y[i])}")
        else:
            lines.append(f"{feats},{data.y[i]:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path, domain_id: int = 0) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ConfigError(f"{path}: missing header line")
        fields = dict(tok.split("=", 1) for tok in header.lstrip("# ").split())
        try:
            d = int(fields["d"])
            task = fields["task"]
            k = int(fields["K"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}: malformed header {header!r}") from exc
        rows, labels = [], []
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != d + 1:
                raise ConfigError(f"{path}:{ln}: expected {d + 1} fields, got {len(parts)}")
            rows.append([float(v) for v in parts[:d]])
            labels.append(parts[d])
    X = np.array(rows, dtype=np.float64)
    if task == CLASSIFICATION:
        y = np.array([int(v) for v in labels], dtype=np.int64)
        return Dataset(domain_id=domain_id, X=X, y=y, task=task, n_classes=k)
    y = np.array([float(v) for v in labels], dtype=np.float64)
    return Dataset(domain_id=domain_id, X=X, y=y, task=task)
