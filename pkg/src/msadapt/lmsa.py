"""Model selection over mixture weights: cover search, ensemble boosting, and
the Lagrangian min-max game, plus the brute-force excess-risk diagnostic.

All three algorithms share the same structure: train one weighted-ERM model
per candidate mixture weight (exactly, through the per-source moment cache)
and judge candidates by their empirical loss on the scarce target sample.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CLASSIFICATION,
    REGRESSION,
    ConfigError,
    Dataset,
    DomainCollection,
    Hypothesis,
    LossSpec,
    TractabilityError,
    empirical_loss,
)
from .discrepancy import grid_losses, parameter_grid
from .erm import (
    MixtureSolver,
    TrainConfig,
    hypothesis_theta,
    theta_hypothesis,
    train_on_mixture,
    _project_ball,
)
from .simplex import SimplexCover, skewness, validate_mixture


def _env_threads() -> int:
    try:
        return max(1, int(os.environ.get("MSA_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class LmsaReport:
    """Per-cover-point audit of a selection run."""

    chosen_lambda: np.ndarray
    lambdas: np.ndarray        # (n_points, p)
    target_losses: np.ndarray  # (n_points,)
    skewnesses: np.ndarray     # (n_points,)
    selected_loss: float
    chosen_index: int

    def save_csv(self, path) -> None:
        p = self.lambdas.shape[1]
        header = ",".join([f"lambda_{k + 1}" for k in range(p)] + ["target_loss", "skewness"])
        lines = [header]
        for i in range(self.lambdas.shape[0]):
            lam = ",".join(f"{v:.17g}" for v in self.lambdas[i])
            lines.append(f"{lam},{self.target_losses[i]:.17g},{self.skewnesses[i]:.17g}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def lmsa_select(coll: DomainCollection, cover: SimplexCover, loss: LossSpec,
                cfg: TrainConfig | None = None, n_threads: int | None = None,
                ) -> tuple[Hypothesis, LmsaReport]:
    """Train one model per cover point, return the one with the smallest
    empirical target loss (ties broken by lowest cover index)."""
    if cover.p != coll.p:
        raise ConfigError(f"cover is over p={cover.p}, collection has p={coll.p}")
    cfg = cfg or TrainConfig()
    n_threads = n_threads if n_threads is not None else _env_threads()
    points = cover.points

    if coll.task == REGRESSION and loss.kind == "squared":
        solver = MixtureSolver(coll, loss, include_target=False)
        train = solver.solve
    else:
        train = lambda lam: train_on_mixture(coll, lam, loss, cfg)  # noqa: E731

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            models = list(pool.map(train, points))
    else:
        models = [train(lam) for lam in points]

    losses = np.array([empirical_loss(h, coll.target, loss) for h in models])
    mhat = coll.mhat
    skews = np.array([skewness(lam, mhat) for lam in points])
    best = int(np.argmin(losses))
    report = LmsaReport(chosen_lambda=points[best].copy(), lambdas=points.copy(),
                        target_losses=losses, skewnesses=skews,
                        selected_loss=float(losses[best]), chosen_index=best)
    return models[best], report


# ---------------------------------------------------------------------------
# Ensemble boosting over the cover models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleHypothesis:
    """Convex combination of hypotheses; predictions mix member predictions,
    so classification outputs remain probability vectors."""

    members: tuple[tuple[float, Hypothesis], ...]

    def __post_init__(self):
        if not self.members:
            raise ConfigError("ensemble needs at least one member")
        alphas = np.array([a for a, _ in self.members])
        if np.any(alphas < -1e-12) or abs(alphas.sum() - 1.0) > 1e-9:
            raise ConfigError("ensemble coefficients must be nonnegative and sum to 1")

    @property
    def task(self) -> str:
        return self.members[0][1].task

    @property
    def d(self) -> int:
        return self.members[0][1].d

    @property
    def n_classes(self) -> int:
        return self.members[0][1].n_classes

    def predict(self, x):
        out = None
        for a, h in self.members:
            p = np.asarray(h.predict(x), dtype=np.float64) * a
            out = p if out is None else out + p
        if self.task == REGRESSION:
            return float(out)
        return out

    def predict_batch(self, X):
        out = None
        for a, h in self.members:
            p = h.predict_batch(X) * a
            out = p if out is None else out + p
        return out


def _pred_loss(pred: np.ndarray, y: np.ndarray, loss: LossSpec) -> float:
    """Mean clipped loss of raw predictions (scalars or probability rows)."""
    if loss.kind == "squared":
        return float(np.minimum((pred - y) ** 2, loss.bound_M).mean())
    if loss.kind == "zero-one":
        return float((np.argmax(pred, axis=1) != y).mean())
    picked = pred[np.arange(len(y)), y.astype(np.int64)]
    return float(np.minimum(-np.log(np.maximum(picked, 1e-300)), loss.bound_M).mean())


def _golden_min(phi, iters: int = 40) -> tuple[float, float]:
    """Golden-section minimum of phi on [0, 1]; returns (value, argmin)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = phi(c), phi(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = phi(d)
    mid = 0.5 * (a + b)
    best = min([(phi(0.0), 0.0), (phi(1.0), 1.0), (phi(mid), mid)])
    return best


@dataclass
class _HNode:
    indices: np.ndarray
    children: list = field(default_factory=list)


def _build_hierarchy(points: np.ndarray, branching: int, min_leaf: int) -> _HNode:
    """Recursive l1-ball partition of the cover with the given branching."""

    def split(indices: np.ndarray) -> _HNode:
        node = _HNode(indices=indices)
        if len(indices) <= max(branching, min_leaf):
            return node
        pts = points[indices]
        centroid = pts.mean(axis=0)
        centers = [int(np.argmax(np.abs(pts - centroid).sum(axis=1)))]
        while len(centers) < branching:
            dist = np.min(
                np.stack([np.abs(pts - pts[c]).sum(axis=1) for c in centers]), axis=0)
            nxt = int(np.argmax(dist))
            if dist[nxt] <= 0:
                break
            centers.append(nxt)
        assign = np.argmin(
            np.stack([np.abs(pts - pts[c]).sum(axis=1) for c in centers]), axis=0)
        for ci in range(len(centers)):
            sub = indices[assign == ci]
            if len(sub):
                node.children.append(split(sub))
        if len(node.children) <= 1:
            node.children = []
        return node

    return split(np.arange(points.shape[0]))


def lmsa_boost(coll: DomainCollection, cover: SimplexCover, loss: LossSpec,
               cfg: TrainConfig | None = None, s: int = 8, rounds: int = 20,
               seed: int = 0, hierarchical: bool = False,
               ) -> tuple[EnsembleHypothesis, np.ndarray]:
    """Randomized coordinate-descent construction of a convex ensemble of the
    per-cover-point models, minimizing empirical target loss.

    Starts from the best single cover model.  Each round samples s candidate
    mixture weights (uniformly, or by hierarchical descent when enabled),
    line-searches the mixing coefficient a in [0, 1] for each, and accepts the
    best candidate only if it strictly decreases the objective, so the
    returned trace is non-increasing.  rounds=0 returns the single-member
    ensemble.  Returns (ensemble, objective trace of length rounds+1).
    """
    if s < 1:
        raise ConfigError("boost needs s >= 1 candidates per round")
    if rounds < 0:
        raise ConfigError("boost rounds must be >= 0")
    cfg = cfg or TrainConfig()
    n_points = len(cover)
    y0 = coll.target.y

    if coll.task == REGRESSION and loss.kind == "squared":
        solver = MixtureSolver(coll, loss, include_target=False)
        train = solver.solve
    else:
        train = lambda lam: train_on_mixture(coll, lam, loss, cfg)  # noqa: E731

    models: dict[int, Hypothesis] = {}
    preds: dict[int, np.ndarray] = {}

    def model_pred(idx: int) -> np.ndarray:
        if idx not in preds:
            if idx not in models:
                models[idx] = train(cover.points[idx])
            preds[idx] = models[idx].predict_batch(coll.target.X)
        return preds[idx]

    single_losses = np.array([_pred_loss(model_pred(i), y0, loss) for i in range(n_points)])
    best0 = int(np.argmin(single_losses))
    members: list[tuple[float, int]] = [(1.0, best0)]
    ens_pred = model_pred(best0).copy()
    cur = float(single_losses[best0])
    trace = [cur]

    rng = np.random.default_rng([seed, 23])
    tree = _build_hierarchy(cover.points, s, s) if hierarchical else None

    def line_search(idx: int) -> tuple[float, float]:
        pc = model_pred(idx)
        return _golden_min(lambda a: _pred_loss((1.0 - a) * ens_pred + a * pc, y0, loss))

    def sample_round() -> list[int]:
        if not hierarchical:
            return list(rng.choice(n_points, size=min(s, n_points), replace=False))
        # descend the partition, one sampled candidate per cluster at each level
        out: list[int] = []
        node, prev_val = tree, math.inf
        while node.children:
            cands = [int(rng.choice(ch.indices)) for ch in node.children]
            vals = [line_search(i)[0] for i in cands]
            out.extend(cands)
            j = int(np.argmin(vals))
            if vals[j] >= prev_val - 1e-12:
                break
            prev_val = vals[j]
            node = node.children[j]
        if not out:
            out = [int(rng.choice(node.indices))]
        return out

    for _ in range(rounds):
        best_val, best_a, best_idx = math.inf, 0.0, -1
        for idx in sample_round():
            val, a = line_search(idx)
            if val < best_val:
                best_val, best_a, best_idx = val, a, idx
        if best_idx >= 0 and best_val < cur:
            a = best_a
            members = [(alpha * (1.0 - a), i) for alpha, i in members]
            members.append((a, best_idx))
            total = sum(alpha for alpha, _ in members)
            members = [(alpha / total, i) for alpha, i in members]
            ens_pred = (1.0 - a) * ens_pred + a * model_pred(best_idx)
            cur = _pred_loss(ens_pred, y0, loss)
        trace.append(cur)

    ens = EnsembleHypothesis(members=tuple(
        (alpha, models[i]) for alpha, i in members if alpha > 0.0))
    return ens, np.array(trace)


# ---------------------------------------------------------------------------
# Min-max saddle-point heuristic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MinmaxConfig:
    """Two-player game settings.

    The defaults run in the certifier-dominant regime (sizable gamma_init and
    several h steps per outer round), where the mixture player's signal
    approximates the implicit gradient of lambda -> target loss of the
    lambda-ERM model.  The output is picked by the best-feasibility rule:
    among iterates whose target loss is within loss_band (relative) of the
    best seen, the one with the smallest constraint violation wins.
    """

    steps: int = 1500
    eta_h: float = 0.5
    eta_lambda: float = 0.5
    eta_gamma: float = 1.0
    gamma_init: float = 10.0
    gamma_max: float = 100.0
    inner_h_steps: int = 5
    loss_band: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError("minmax steps must be >= 1")
        for name in ("eta_h", "eta_lambda", "eta_gamma"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.gamma_init < 0 or self.gamma_max <= 0 or self.gamma_init > self.gamma_max:
            raise ConfigError("need 0 <= gamma_init <= gamma_max, gamma_max > 0")
        if self.inner_h_steps < 1:
            raise ConfigError("inner_h_steps must be >= 1")
        if self.loss_band < 0:
            raise ConfigError("loss_band must be >= 0")


@dataclass(frozen=True)
class MinmaxState:
    """Returned iterate plus the full recorded trajectory."""

    h: Hypothesis
    lam: np.ndarray
    gamma: float
    h_prime: Hypothesis
    target_losses: np.ndarray
    violations: np.ndarray
    gammas: np.ndarray
    objectives: np.ndarray
    lambdas: np.ndarray
    chosen_step: int


def lmsa_minmax(coll: DomainCollection, loss: LossSpec,
                cfg: MinmaxConfig | None = None) -> tuple[Hypothesis, MinmaxState]:
    """Alternating first-order solver for the constrained selection game:
    minimize target loss over hypotheses certified (by the second player) to
    be the weighted-ERM solution of some mixture weight.

    Requires a strongly convex training objective (strong_convexity_mu > 0);
    the per-step updates are a gradient step on h, an exponentiated-gradient
    step on the mixture weight, a clipped gradient-ascent step on the
    multiplier, and an exact (or warm-started) re-solve of the inner model.
    """
    cfg = cfg or MinmaxConfig()
    if loss.mu <= 0:
        raise ConfigError(
            "lmsa_minmax requires a strictly convex training objective: "
            "set strong_convexity_mu > 0 (e.g. via regularization > 0)")
    if coll.task == REGRESSION and loss.kind == "squared":
        return _minmax_squared(coll, loss, cfg)
    return _minmax_generic(coll, loss, cfg)


def _minmax_squared(coll, loss, cfg):
    solver = MixtureSolver(coll, loss, include_target=True)
    p, d = coll.p, coll.d
    reg = loss.regularization
    B = loss.norm_ball_B

    lam = np.full(p, 1.0 / p)
    theta = hypothesis_theta(solver.solve(lam))
    gamma = cfg.gamma_init

    S0 = 2.0 * float(np.linalg.eigvalsh(solver.target_stats[0])[-1])
    Sk = 2.0 * max(float(np.linalg.eigvalsh(solver.G[k])[-1]) for k in range(p)) + 2.0 * reg

    T = cfg.steps
    target_losses = np.empty(T)
    violations = np.empty(T)
    gammas = np.empty(T)
    lambdas = np.empty((T, p))
    thetas = np.empty((T, d + 1))

    for t in range(T):
        theta_p = hypothesis_theta(solver.solve(lam))
        lk_h = solver.source_losses(theta)
        lk_hp = solver.source_losses(theta_p)
        o_h = float(lam @ lk_h) + reg * float(theta[:-1] @ theta[:-1])
        o_hp = float(lam @ lk_hp) + reg * float(theta_p[:-1] @ theta_p[:-1])
        v = max(o_h - o_hp, 0.0)
        l0 = solver.target_loss(theta)

        target_losses[t] = l0
        violations[t] = v
        gammas[t] = gamma
        lambdas[t] = lam
        thetas[t] = theta

        g_lam = gamma * (lk_h - lk_hp)
        lam = lam * np.exp(np.clip(-cfg.eta_lambda * g_lam, -50.0, 50.0))
        lam = lam / lam.sum()

        gamma = min(max(gamma + cfg.eta_gamma * (o_h - o_hp), 0.0), cfg.gamma_max)

        step = cfg.eta_h / (S0 + gamma * Sk)
        for _ in range(cfg.inner_h_steps):
            grad = solver.target_grad(theta) + gamma * (
                solver.mixture_grad(theta, lam) + solver.reg_grad(theta))
            theta = _project_ball(theta - step * grad, B)

    chosen = _best_feasible(target_losses, violations, cfg.loss_band)
    h = theta_hypothesis(thetas[chosen])
    lam_c = lambdas[chosen]
    state = MinmaxState(
        h=h, lam=lam_c.copy(), gamma=float(gammas[chosen]),
        h_prime=solver.solve(lam_c),
        target_losses=target_losses, violations=violations, gammas=gammas,
        objectives=target_losses + gammas * violations, lambdas=lambdas,
        chosen_step=chosen)
    return h, state


def _best_feasible(target_losses: np.ndarray, violations: np.ndarray, band: float) -> int:
    best = float(target_losses.min())
    thresh = best + band * max(abs(best), 1e-12)
    eligible = np.where(target_losses <= thresh)[0]
    return int(eligible[np.argmin(violations[eligible])])


def _minmax_generic(coll, loss, cfg):
    """Per-example path for classification (multinomial log loss)."""
    if coll.task != CLASSIFICATION or loss.kind != "multinomial-log":
        raise ConfigError("min-max supports squared regression or multinomial-log classification")
    p, d, K = coll.p, coll.d, coll.n_classes
    reg = loss.regularization
    B = loss.norm_ball_B
    nparam = K * d + K

    onehots = [np.eye(K)[ds.y.astype(np.int64)] for ds in coll.sources]
    onehot0 = np.eye(K)[coll.target.y.astype(np.int64)]

    def unpack(theta):
        return theta[:K * d].reshape(K, d), theta[K * d:]

    def ce_and_grad(theta, X, Y):
        W, b = unpack(theta)
        Z = X @ W.T + b
        Z -= Z.max(axis=1, keepdims=True)
        P = np.exp(Z)
        P /= P.sum(axis=1, keepdims=True)
        n = X.shape[0]
        ce = float(-(np.log(np.maximum((P * Y).sum(axis=1), 1e-300))).mean())
        R = (P - Y) / n
        return ce, np.concatenate([(R.T @ X).ravel(), R.sum(axis=0)])

    def source_losses_grads(theta):
        out_l = np.empty(p)
        grads = []
        for k, ds in enumerate(coll.sources):
            lval, g = ce_and_grad(theta, ds.X, onehots[k])
            out_l[k] = lval
            grads.append(g)
        return out_l, grads

    def reg_term(theta):
        W, _ = unpack(theta)
        return reg * float(np.sum(W * W))

    def reg_grad(theta):
        g = 2.0 * reg * theta.copy()
        g[K * d:] = 0.0
        return g

    # conservative smoothness: softmax curvature <= (1/2) max_k lam_max(Gram_k)
    smax = 0.0
    for ds in coll.sources + (coll.target,):
        Xa = np.hstack([ds.X, np.ones((ds.n, 1))])
        smax = max(smax, float(np.linalg.eigvalsh(Xa.T @ Xa / ds.n)[-1]))
    S = 0.5 * smax + 2.0 * reg

    lam = np.full(p, 1.0 / p)
    theta = np.zeros(nparam)
    theta_p = np.zeros(nparam)
    gamma = cfg.gamma_init

    T = cfg.steps
    target_losses = np.empty(T)
    violations = np.empty(T)
    gammas = np.empty(T)
    lambdas = np.empty((T, p))
    thetas = np.empty((T, nparam))

    for t in range(T):
        # warm-started inner re-solve (10 gradient steps on the weighted objective)
        for _ in range(10):
            _, grads_p = _weighted_obj(theta_p, lam, coll, onehots, ce_and_grad, reg_grad)
            theta_p = theta_p - (1.0 / S) * grads_p
        lk_h, grads_h = source_losses_grads(theta)
        lk_hp, _ = source_losses_grads(theta_p)
        o_h = float(lam @ lk_h) + reg_term(theta)
        o_hp = float(lam @ lk_hp) + reg_term(theta_p)
        v = max(o_h - o_hp, 0.0)
        l0, g0 = ce_and_grad(theta, coll.target.X, onehot0)

        target_losses[t] = min(l0, loss.bound_M)
        violations[t] = v
        gammas[t] = gamma
        lambdas[t] = lam
        thetas[t] = theta

        lam = lam * np.exp(np.clip(-cfg.eta_lambda * gamma * (lk_h - lk_hp), -50.0, 50.0))
        lam = lam / lam.sum()
        gamma = min(max(gamma + cfg.eta_gamma * (o_h - o_hp), 0.0), cfg.gamma_max)

        step = cfg.eta_h / (S * (1.0 + gamma))
        for _ in range(cfg.inner_h_steps):
            mix_grad = sum(lam[k] * grads_h[k] for k in range(p)) + reg_grad(theta)
            theta = _project_ball(theta - step * (g0 + gamma * mix_grad), B)
            lk_h, grads_h = source_losses_grads(theta)
            _, g0 = ce_and_grad(theta, coll.target.X, onehot0)

    chosen = _best_feasible(target_losses, violations, cfg.loss_band)
    W, b = unpack(thetas[chosen])
    h = Hypothesis(weights=W, intercept=b, task=CLASSIFICATION)
    Wp, bp = unpack(theta_p)
    state = MinmaxState(
        h=h, lam=lambdas[chosen].copy(), gamma=float(gammas[chosen]),
        h_prime=Hypothesis(weights=Wp, intercept=bp, task=CLASSIFICATION),
        target_losses=target_losses, violations=violations, gammas=gammas,
        objectives=target_losses + gammas * violations, lambdas=lambdas,
        chosen_step=chosen)
    return h, state


def _weighted_obj(theta, lam, coll, onehots, ce_and_grad, reg_grad):
    total_g = reg_grad(theta)
    total_l = 0.0
    for k, ds in enumerate(coll.sources):
        if lam[k] == 0.0:
            continue
        lval, g = ce_and_grad(theta, ds.X, onehots[k])
        total_l += lam[k] * lval
        total_g = total_g + lam[k] * g
    return total_l, total_g


# ---------------------------------------------------------------------------
# Brute-force excess-risk diagnostic (tiny instances)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExcessDiag:
    """Both sides of the uniform excess-risk decomposition over a finite
    parameter-grid hypothesis class."""

    deviation_sup: float
    disc_sup: float
    bound: float
    selected_excess: float


def excess_bound_diag(coll: DomainCollection, lam, loss: LossSpec,
                      pop_sources: list[Dataset], pop_target: Dataset,
                      resolution: float = 0.02, with_intercept: bool = False,
                      ) -> ExcessDiag:
    """Evaluate the excess-risk bound and the realized excess on a lattice.

    pop_sources / pop_target are large held-out samples standing in for the
    population distributions.  All suprema and argmins range over the same
    finite lattice class, so bound >= selected_excess holds by construction
    and is verified numerically by tests.
    """
    if coll.d > 3 or (coll.task == CLASSIFICATION and coll.n_classes > 2):
        raise TractabilityError("excess diagnostic needs d <= 3 (and K <= 2)")
    if len(pop_sources) != coll.p:
        raise ConfigError("need one population stand-in per source")
    lam = validate_mixture(lam, coll.p)
    thetas = parameter_grid(coll.task, coll.d, coll.n_classes, loss.norm_ball_B,
                            resolution, with_intercept)
    L_train = np.stack([grid_losses(thetas, ds, loss, with_intercept) for ds in coll.sources])
    L_pop = np.stack([grid_losses(thetas, ds, loss, with_intercept) for ds in pop_sources])
    L_bar = lam @ L_train
    L_mix = lam @ L_pop
    L0 = grid_losses(thetas, pop_target, loss, with_intercept)
    deviation = float(np.max(np.abs(L_bar - L_mix)))
    disc = float(np.max(np.abs(L0 - L_mix)))
    selected = float(L0[int(np.argmin(L_bar))] - L0.min())
    return ExcessDiag(deviation_sup=deviation, disc_sup=disc,
                      bound=2.0 * deviation + 2.0 * disc, selected_excess=selected)
