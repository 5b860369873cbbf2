"""Comparison methods: naive pooling baselines and the two discrepancy-driven
mixture selectors (per-source pairwise weighting and the convex-combination
penalty objective)."""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .core import (
    ConfigError,
    Dataset,
    DomainCollection,
    Hypothesis,
    LossSpec,
    empirical_loss,
)
from .discrepancy import disc_mixture_estimate, pairwise_disc_matrix
from .erm import TrainConfig, train_dataset, train_on_mixture
from .simplex import skewness, validate_mixture


class BaselineKind(str, Enum):
    target_only = "target_only"
    best_single_source = "best_single_source"
    combined_sources = "combined_sources"
    sources_plus_target = "sources_plus_target"
    sources_plus_target_equal = "sources_plus_target_equal"
    pairwise_disc = "pairwise_disc"
    conv_disc = "conv_disc"


def _with_target_as_source(coll: DomainCollection) -> DomainCollection:
    extra = Dataset(domain_id=coll.p + 1, X=coll.target.X, y=coll.target.y,
                    task=coll.target.task, n_classes=coll.target.n_classes)
    return DomainCollection(target=coll.target, sources=(*coll.sources, extra), task=coll.task)


def minimize_pairwise_objective(disc: np.ndarray, mhat: np.ndarray, m: int, gamma: float,
                                steps: int = 500) -> tuple[np.ndarray, np.ndarray]:
    """Minimize sum_k lambda_k disc_k + gamma sqrt(m * skewness(lambda)) over the
    simplex by exponentiated gradient with backtracking, so the recorded
    objective trace is non-increasing by construction."""
    p = len(disc)
    lam = np.full(p, 1.0 / p)

    def objective(l):
        return float(l @ disc + gamma * math.sqrt(m * float(np.sum(l * l / mhat))))

    def gradient(l):
        s = float(np.sum(l * l / mhat))
        return disc + gamma * math.sqrt(m) * (l / mhat) / max(math.sqrt(s), 1e-300)

    eta = 1.0
    trace = [objective(lam)]
    for _ in range(steps):
        g = gradient(lam)
        g = g - g.mean()  # gauge: uniform shifts do not move the EG update
        stepped = False
        while eta > 1e-12:
            cand = lam * np.exp(np.clip(-eta * g, -50.0, 50.0))
            cand = cand / cand.sum()
            if objective(cand) <= trace[-1]:
                lam = cand
                stepped = True
                break
            eta *= 0.5
        trace.append(objective(lam))
        if not stepped:
            break
        eta = min(eta * 2.0, 1e3)
    return lam, np.array(trace)


def conv_disc_penalty(lam, coll: DomainCollection, loss: LossSpec, disc_est: float,
                      constants: dict) -> float:
    """Penalty attached to a mixture weight in the convex-combination
    discrepancy objective: the measured discrepancy plus the target-estimation,
    cover-slack and skewness terms with configurable constants."""
    lam = validate_mixture(lam, coll.p)
    c = float(constants["c"])
    d_proxy = float(constants["d_proxy"])
    eps = float(constants["epsilon"])
    delta = float(constants["delta"])
    if min(c, d_proxy, eps, delta) <= 0:
        raise ConfigError("conv_disc constants must be positive")
    m0, m, p = coll.m0, coll.m, coll.p
    M = loss.bound_M
    s = skewness(lam, coll.mhat)
    term_target = c * math.sqrt((d_proxy + math.log(1.0 / delta)) / m0)
    term_cover = eps * M
    term_skew = c * M * math.sqrt(s / m) * math.sqrt(
        d_proxy * math.log(math.e * m / d_proxy) + p * math.log(1.0 / (eps * delta)))
    return float(disc_est) + term_target + term_cover + term_skew


def _run_pairwise(coll, loss, cfg, hyper):
    restarts = int(hyper.get("disc_restarts", 8))
    iters = int(hyper.get("disc_iters", 300))
    seed = int(hyper.get("seed", 0))
    disc = pairwise_disc_matrix(coll, loss, method="ascent", restarts=restarts,
                                iters=iters, seed=seed)
    mhat, m = coll.mhat, coll.m

    gamma = hyper.get("gamma")
    chosen_gamma = None
    if gamma is not None:
        lam, trace = minimize_pairwise_objective(disc, mhat, m, float(gamma))
        chosen_gamma = float(gamma)
    else:
        # pick gamma on a held-out quarter of the target sample
        grid = hyper.get("gamma_grid", (1e-3, 1e-2, 1e-1, 1.0, 10.0))
        rng = np.random.default_rng([seed, 41])
        perm = rng.permutation(coll.m0)
        n_val = max(1, coll.m0 // 4)
        val_idx = perm[:n_val]
        val = Dataset(domain_id=0, X=coll.target.X[val_idx], y=coll.target.y[val_idx],
                      task=coll.task, n_classes=coll.target.n_classes)
        best_val = math.inf
        lam, trace = None, None
        for g in grid:
            lam_g, trace_g = minimize_pairwise_objective(disc, mhat, m, float(g))
            h_g = train_on_mixture(coll, lam_g, loss, cfg)
            v = empirical_loss(h_g, val, loss)
            if v < best_val:
                best_val, lam, trace, chosen_gamma = v, lam_g, trace_g, float(g)
    h = train_on_mixture(coll, lam, loss, cfg)
    meta = {"lambda": lam, "disc": disc, "gamma": chosen_gamma, "objective_trace": trace}
    return h, meta


def _run_conv_disc(coll, loss, cfg, hyper):
    constants = {
        "c": float(hyper.get("c", 1.0)),
        "d_proxy": float(hyper.get("d_proxy", coll.d + 1)),
        "epsilon": float(hyper.get("epsilon", 0.1)),
        "delta": float(hyper.get("delta", 0.1)),
    }
    outer = int(hyper.get("outer_iters", 5))
    eg_steps = int(hyper.get("eg_steps", 50))
    seed = int(hyper.get("seed", 0))
    restarts = int(hyper.get("disc_restarts", 6))
    iters = int(hyper.get("disc_iters", 200))
    mhat, m, M = coll.mhat, coll.m, loss.bound_M
    cch = constants["c"] * M * math.sqrt(
        constants["d_proxy"] * math.log(math.e * m / constants["d_proxy"])
        + coll.p * math.log(1.0 / (constants["epsilon"] * constants["delta"])))

    lam = np.full(coll.p, 1.0 / coll.p)
    h = train_on_mixture(coll, lam, loss, cfg)
    trace = []
    for it in range(outer):
        disc_est = disc_mixture_estimate(coll, lam, loss, restarts=restarts,
                                         iters=iters, seed=seed * 7 + it).value
        source_losses = np.array([empirical_loss(h, ds, loss) for ds in coll.sources])

        def objective(l):
            return float(l @ source_losses) + conv_disc_penalty(l, coll, loss, disc_est, constants)

        # the measured discrepancy is held fixed during the lambda step; only
        # the linear loss term and the skewness term carry a gradient
        def gradient(l):
            s = float(np.sum(l * l / mhat))
            return source_losses + cch / math.sqrt(m) * (l / mhat) / max(math.sqrt(s), 1e-300)

        eta, cur = 1.0, objective(lam)
        for _ in range(eg_steps):
            g = gradient(lam)
            g = g - g.mean()
            while eta > 1e-12:
                cand = lam * np.exp(np.clip(-eta * g, -50.0, 50.0))
                cand = cand / cand.sum()
                if objective(cand) <= cur:
                    lam, cur = cand, objective(cand)
                    break
                eta *= 0.5
            eta = min(eta * 2.0, 1e3)
        h = train_on_mixture(coll, lam, loss, cfg)
        trace.append(cur)
    meta = {"lambda": lam, "objective_trace": np.array(trace), "constants": constants}
    return h, meta


def run_baseline(kind: BaselineKind | str, coll: DomainCollection, loss: LossSpec,
                 cfg: TrainConfig | None = None, hyper: dict | None = None,
                 ) -> tuple[Hypothesis, dict]:
    """Run one comparison method; returns (model, metadata).

    metadata carries the mixture weight where one exists, plus method
    internals (discrepancy estimates, chosen hyperparameters, traces).
    """
    kind = BaselineKind(kind)
    cfg = cfg or TrainConfig()
    hyper = dict(hyper or {})

    if kind is BaselineKind.target_only:
        return train_dataset(coll.target, loss, cfg), {}

    if kind is BaselineKind.best_single_source:
        models = [train_dataset(ds, loss, cfg) for ds in coll.sources]
        losses = [empirical_loss(h, coll.target, loss) for h in models]
        best = int(np.argmin(losses))
        return models[best], {"chosen_source": best, "target_losses": np.array(losses)}

    if kind is BaselineKind.combined_sources:
        lam = coll.mhat
        return train_on_mixture(coll, lam, loss, cfg), {"lambda": lam}

    if kind is BaselineKind.sources_plus_target:
        ext = _with_target_as_source(coll)
        lam = ext.mhat  # size-proportional = plain concatenation
        return train_on_mixture(ext, lam, loss, cfg), {"lambda": lam}

    if kind is BaselineKind.sources_plus_target_equal:
        ext = _with_target_as_source(coll)
        lam = np.full(ext.p, 1.0 / ext.p)
        return train_on_mixture(ext, lam, loss, cfg), {"lambda": lam}

    if kind is BaselineKind.pairwise_disc:
        return _run_pairwise(coll, loss, cfg, hyper)

    if kind is BaselineKind.conv_disc:
        return _run_conv_disc(coll, loss, cfg, hyper)

    raise ConfigError(f"unknown baseline {kind!r}")
