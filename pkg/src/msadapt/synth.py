"""Synthetic benchmarks: the Gaussian toy regression sweep and the
three-source counterexample where pairwise discrepancies mislead.

Both generators are deterministic per seed (independent substreams per
dataset) and return oracle bundles carrying the true parameters plus a
held-out test sample drawn from the target process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CalibrationError,
    ConfigError,
    Dataset,
    DomainCollection,
    LossSpec,
    REGRESSION,
    squared_loss,
)
from .discrepancy import disc_estimate
from .simplex import validate_mixture


@dataclass(frozen=True)
class ToyRegressionSpec:
    """Gaussian mixture-of-linear-tasks regression benchmark.

    Source k draws x ~ N(0, I_d/d) and y = w_k . x + eta with scalar noise
    eta ~ N(0, sigma_sq); the target draws a latent source index from
    lambda_star and then uses that source's rule.
    """

    p: int = 4
    d: int = 100
    m_k: int = 10000
    m0: int = 100
    lambda_star: tuple = (0.7, 0.1, 0.1, 0.1)
    sigma_sq: float = 0.01
    seed: int = 0
    test_n: int = 20000

    def __post_init__(self):
        if self.p < 1 or self.d < 1 or self.m_k < 1 or self.m0 < 1 or self.test_n < 1:
            raise ConfigError("toy spec sizes must be >= 1")
        if self.sigma_sq < 0:
            raise ConfigError("sigma_sq must be >= 0")
        lam = validate_mixture(self.lambda_star, self.p, name="lambda_star")
        object.__setattr__(self, "lambda_star", tuple(float(v) for v in lam))


@dataclass(frozen=True)
class ToyOracle:
    """Ground truth for evaluating models on the toy benchmark."""

    w: np.ndarray            # (p, d) true per-source weights
    lambda_star: np.ndarray
    sigma_sq: float
    test: Dataset            # held-out target-process sample
    target_domains: np.ndarray  # latent source index of each target example


def _draw_target(rng, w: np.ndarray, lam: np.ndarray, n: int, sigma: float, domain_id: int):
    p, d = w.shape
    domains = rng.choice(p, size=n, p=lam)
    X = rng.normal(size=(n, d)) / math.sqrt(d)
    y = np.einsum("ij,ij->i", X, w[domains]) + sigma * rng.normal(size=n)
    return Dataset(domain_id=domain_id, X=X, y=y, task=REGRESSION), domains


def gen_toy_regression(spec: ToyRegressionSpec) -> tuple[DomainCollection, ToyOracle]:
    """Generate the toy collection plus its evaluation oracle."""
    lam = np.array(spec.lambda_star)
    sigma = math.sqrt(spec.sigma_sq)
    w = np.random.default_rng([spec.seed, 0]).normal(size=(spec.p, spec.d)) / math.sqrt(spec.d)

    sources = []
    for k in range(spec.p):
        rng = np.random.default_rng([spec.seed, 1, k])
        X = rng.normal(size=(spec.m_k, spec.d)) / math.sqrt(spec.d)
        y = X @ w[k] + sigma * rng.normal(size=spec.m_k)
        sources.append(Dataset(domain_id=k + 1, X=X, y=y, task=REGRESSION))

    target, domains = _draw_target(np.random.default_rng([spec.seed, 2]), w, lam,
                                   spec.m0, sigma, domain_id=0)
    test, _ = _draw_target(np.random.default_rng([spec.seed, 3]), w, lam,
                           spec.test_n, sigma, domain_id=0)
    coll = DomainCollection(target=target, sources=tuple(sources), task=REGRESSION)
    oracle = ToyOracle(w=w, lambda_star=lam, sigma_sq=spec.sigma_sq, test=test,
                       target_domains=domains)
    return coll, oracle


def subset_target(coll: DomainCollection, n: int) -> DomainCollection:
    """Collection with the target truncated to its first n examples."""
    if n < 1 or n > coll.m0:
        raise ConfigError(f"target subset size {n} out of range [1, {coll.m0}]")
    t = coll.target
    target = Dataset(domain_id=t.domain_id, X=t.X[:n], y=t.y[:n], task=t.task,
                     n_classes=t.n_classes)
    return DomainCollection(target=target, sources=coll.sources, task=coll.task)


@dataclass(frozen=True)
class Example1Oracle:
    """Ground truth and calibration record for the counterexample instance."""

    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    offset: float          # calibrated distance of w3 from the source mean
    disc01: float
    disc02: float
    disc03: float
    goal: float
    sigma_sq: float
    test: Dataset
    loss: LossSpec


def gen_example1(n: int, seed: int = 0, sigma_sq: float = 0.01,
                 norm_ball_B: float = 2.0, bound_M: float = 200.0,
                 rel_tol: float = 0.05, max_iters: int = 60,
                 ) -> tuple[DomainCollection, Example1Oracle]:
    """Three sources where the target is the even blend of the first two.

    Sources 1 and 2 carry mirror-image weight vectors; the target mixes their
    label rules 50/50.  The third source's weights sit along the mean
    direction at a distance calibrated by bisection so that the measured
    discrepancy to the target matches that of sources 1 and 2 within rel_tol.
    Pairwise-discrepancy weighting therefore sees three equally-far sources,
    while the best mixture is (0.5, 0.5, 0).
    """
    if n < 100:
        raise ConfigError("example1 needs n >= 100 per domain")
    d = 2
    sigma = math.sqrt(sigma_sq)
    w1 = np.array([1.0, 1.0])
    w2 = np.array([1.0, -1.0])
    wbar = 0.5 * (w1 + w2)
    direction = wbar / np.linalg.norm(wbar)
    loss = squared_loss(bound_M=bound_M, norm_ball_B=norm_ball_B)

    def source(k, wk):
        rng = np.random.default_rng([seed, 5, k])
        X = rng.normal(size=(n, d))
        return Dataset(domain_id=k, X=X, y=X @ wk + sigma * rng.normal(size=n), task=REGRESSION)

    def target_sample(tag, size):
        rng = np.random.default_rng([seed, 6, tag])
        X = rng.normal(size=(size, d))
        rule = rng.integers(0, 2, size=size)
        W = np.where(rule[:, None] == 0, w1[None, :], w2[None, :])
        y = np.einsum("ij,ij->i", X, W) + sigma * rng.normal(size=size)
        return Dataset(domain_id=0, X=X, y=y, task=REGRESSION)

    d1 = source(1, w1)
    d2 = source(2, w2)
    target = target_sample(0, n)
    test = target_sample(1, max(4 * n, 2000))

    rng3 = np.random.default_rng([seed, 5, 3])
    X3 = rng3.normal(size=(n, d))
    eta3 = rng3.normal(size=n)

    def disc_to_target(ds, tag):
        return disc_estimate(ds, target, loss, method="ascent", restarts=8, iters=300,
                             seed=seed * 13 + tag).value

    disc01 = disc_to_target(d1, 1)
    disc02 = disc_to_target(d2, 2)
    goal = 0.5 * (disc01 + disc02)

    def build_d3(offset):
        w3 = wbar + offset * direction
        return Dataset(domain_id=3, X=X3, y=X3 @ w3 + sigma * eta3, task=REGRESSION), w3

    def disc3(offset):
        ds, _ = build_d3(offset)
        return disc_to_target(ds, 3)

    lo, hi = 0.0, 1.0
    f_hi = disc3(hi)
    expansions = 0
    while f_hi < goal and expansions < 20:
        hi *= 2.0
        f_hi = disc3(hi)
        expansions += 1
    if f_hi < goal:
        raise CalibrationError(
            f"could not bracket the third-source offset: disc({hi})={f_hi:.4g} < goal {goal:.4g}")

    offset, val = hi, f_hi
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        val = disc3(mid)
        if abs(val - goal) <= rel_tol * goal:
            offset = mid
            break
        if val < goal:
            lo = mid
        else:
            hi = mid
    else:
        raise CalibrationError(
            f"third-source calibration did not converge: last disc={val:.6g}, goal={goal:.6g}, "
            f"bracket=[{lo:.6g}, {hi:.6g}], rel_tol={rel_tol}")

    d3, w3 = build_d3(offset)
    disc03 = disc3(offset)
    coll = DomainCollection(target=target, sources=(d1, d2, d3), task=REGRESSION)
    oracle = Example1Oracle(w1=w1, w2=w2, w3=w3, offset=offset, disc01=disc01,
                            disc02=disc02, disc03=disc03, goal=goal, sigma_sq=sigma_sq,
                            test=test, loss=loss)
    return coll, oracle
