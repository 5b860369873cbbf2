"""Monte-Carlo simulator for the information-theoretic model-selection
penalty: a discrete family where the sources pin down everything except
which side of each symbol pair the target mixture leans to, so any learner
must run p/2 Bernoulli tests on m0 target samples.

Excess risks are computed in closed form from the conditional table (no
test-set noise); the empirical scaling in sqrt(p/m0) is the object under
study, not any particular constant.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, TractabilityError


@dataclass(frozen=True)
class LowerBoundInstance:
    """One member of the hard family.

    The input space is the p/2 symbols; source 2x-1 (odd, 1-based) labels
    symbol x with 0, source 2x labels it 1, and each source's marginal sits
    on its own symbol, so the target D_lambda has the uniform 2/p marginal
    and conditional P(y=1|x) = (1 +- epsilon)/2.  Pairs beyond the first p/4
    are fixed at the low side; the sign pattern drives the first p/4 pairs,
    one bit each.
    """

    p: int
    m0: int
    epsilon: float
    lambda_true: np.ndarray   # (p,)
    cond_table: np.ndarray    # (p/2,) true P(y=1|x)
    sign_pattern: np.ndarray  # (p/4,) bits
    bayes: np.ndarray         # (p/2,) optimal prediction bits


def build_instance(p: int, m0: int, sign_pattern=None, seed: int = 0,
                   epsilon: float | None = None) -> LowerBoundInstance:
    """Construct the instance encoded by a sign pattern of length p/4.

    epsilon defaults to sqrt(p/m0)/100; pass epsilon=0 for the degenerate
    variant where every predictor has zero excess.
    """
    if p % 4 != 0 or p <= 0:
        raise ConfigError(f"p must be a positive multiple of 4, got {p}")
    if m0 < 1:
        raise ConfigError("m0 must be >= 1")
    if epsilon is None:
        epsilon = 0.01 * math.sqrt(p / m0)
    if not (0.0 <= epsilon < 1.0):
        raise ConfigError(f"epsilon must be in [0, 1), got {epsilon}")
    n_bits = p // 4
    if sign_pattern is None:
        sign_pattern = np.random.default_rng(seed).integers(0, 2, size=n_bits)
    bits = np.asarray(sign_pattern, dtype=np.int64).ravel()
    if bits.shape != (n_bits,) or np.any((bits != 0) & (bits != 1)):
        raise ConfigError(f"sign_pattern must be {n_bits} bits")

    n_pairs = p // 2
    hi, lo = (1.0 + epsilon) / p, (1.0 - epsilon) / p
    lam = np.empty(p)
    for i in range(n_pairs):
        up = bool(bits[i]) if i < n_bits else False
        even = hi if up else lo          # lambda at the label-1 source of pair i
        lam[2 * i] = 2.0 / p - even      # label-0 source
        lam[2 * i + 1] = even
    cond = lam[1::2] * (p / 2.0)
    bayes = (lam[1::2] > lam[0::2]).astype(np.int64)
    return LowerBoundInstance(p=p, m0=m0, epsilon=float(epsilon), lambda_true=lam,
                              cond_table=cond, sign_pattern=bits, bayes=bayes)


def sample_target(inst: LowerBoundInstance, rng: np.random.Generator,
                  n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Draw labeled target samples: symbols uniform, labels per conditional."""
    n = inst.m0 if n is None else n
    xs = rng.integers(0, inst.p // 2, size=n)
    ys = (rng.random(n) < inst.cond_table[xs]).astype(np.int64)
    return xs, ys


def plug_in_majority(inst: LowerBoundInstance, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Per-symbol majority vote; ties and unseen symbols predict 0."""
    n_sym = inst.p // 2
    total = np.bincount(xs, minlength=n_sym)
    ones = np.bincount(xs[ys == 1], minlength=n_sym)
    return (2 * ones > total).astype(np.int64)


def excess_risk(inst: LowerBoundInstance, pred_bits: np.ndarray) -> float:
    """Exact zero-one excess of a per-symbol predictor over the optimum.

    Each wrongly decided symbol contributes its marginal mass 2/p times the
    conditional gap |2 P(y=1|x) - 1|.
    """
    gap = np.abs(2.0 * inst.cond_table - 1.0)
    wrong = (np.asarray(pred_bits, dtype=np.int64) != inst.bayes)
    return float((2.0 / inst.p) * np.sum(gap * wrong))


def lmsa_candidate_select(inst: LowerBoundInstance, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Cover-selection adapter: the candidate set is the full sign-pattern
    family (sources known exactly), each candidate's model is its optimal
    predictor, and the winner has the smallest empirical target error."""
    n_bits = inst.p // 4
    if n_bits > 16:
        raise TractabilityError("candidate family 2^(p/4) too large; use p <= 64")
    best_bits, best_err = None, math.inf
    for pattern in itertools.product((0, 1), repeat=n_bits):
        cand = build_instance(inst.p, inst.m0, sign_pattern=np.array(pattern),
                              epsilon=inst.epsilon)
        err = float(np.mean(cand.bayes[xs] != ys))
        if err < best_err:
            best_err, best_bits = err, cand.bayes
    return best_bits


_ALGORITHMS = ("plugin", "lmsa", "bayes")


@dataclass(frozen=True)
class PenaltyRow:
    p: int
    m0: int
    epsilon: float
    mean_excess: float
    stderr: float


def simulate_penalty(p_list, m0_list, trials: int, algorithm: str = "plugin",
                     seed: int = 0, epsilon: float | None = None) -> list[PenaltyRow]:
    """Mean closed-form excess per (p, m0) cell, averaged over random sign
    patterns and target samples; rows sorted by (p, m0)."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if algorithm not in _ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {_ALGORITHMS}")
    rows = []
    for p in sorted(set(int(v) for v in p_list)):
        for m0 in sorted(set(int(v) for v in m0_list)):
            rng = np.random.default_rng([seed, p, m0])
            vals = np.empty(trials)
            for t in range(trials):
                pattern = rng.integers(0, 2, size=p // 4)
                inst = build_instance(p, m0, sign_pattern=pattern, epsilon=epsilon)
                xs, ys = sample_target(inst, rng)
                if algorithm == "plugin":
                    pred = plug_in_majority(inst, xs, ys)
                elif algorithm == "lmsa":
                    pred = lmsa_candidate_select(inst, xs, ys)
                else:
                    pred = inst.bayes
                vals[t] = excess_risk(inst, pred)
            rows.append(PenaltyRow(p=p, m0=m0, epsilon=float(inst.epsilon),
                                   mean_excess=float(vals.mean()),
                                   stderr=float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0))
    return rows
