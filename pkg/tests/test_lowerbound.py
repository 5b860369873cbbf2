"""Model-selection penalty simulator: construction, closed-form excess, scaling."""

import math

import numpy as np
import pytest

from msadapt.core import ConfigError
from msadapt.lowerbound import (
    build_instance,
    excess_risk,
    lmsa_candidate_select,
    plug_in_majority,
    sample_target,
    simulate_penalty,
)


def test_pattern_decoding_all_zeros():
    inst = build_instance(4, 100, sign_pattern=np.array([0]))
    eps = inst.epsilon
    assert eps == pytest.approx(0.01 * math.sqrt(4 / 100))
    # every pair sits at the low side: label-1 source mass (1 - eps)/4
    np.testing.assert_allclose(inst.lambda_true[1::2], (1 - eps) / 4)
    np.testing.assert_allclose(inst.lambda_true[0::2], (1 + eps) / 4)
    # pairs sum to 2/p exactly
    np.testing.assert_allclose(inst.lambda_true[0::2] + inst.lambda_true[1::2], 0.5,
                               atol=0)
    assert inst.lambda_true.sum() == pytest.approx(1.0, abs=1e-15)


def test_pattern_decoding_mixed_bits():
    inst = build_instance(8, 50, sign_pattern=np.array([1, 0]))
    eps = inst.epsilon
    # first pair leans to label 1, second to label 0, fixed pairs low
    np.testing.assert_allclose(inst.lambda_true[1], (1 + eps) / 8)
    np.testing.assert_allclose(inst.lambda_true[3], (1 - eps) / 8)
    np.testing.assert_allclose(inst.cond_table, [(1 + eps) / 2, (1 - eps) / 2,
                                                 (1 - eps) / 2, (1 - eps) / 2])


def test_bayes_rule_matches_lambda_comparison():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = int(rng.choice([4, 8, 12]))
        inst = build_instance(p, 200, sign_pattern=rng.integers(0, 2, size=p // 4))
        manual = (inst.lambda_true[1::2] > inst.lambda_true[0::2]).astype(int)
        np.testing.assert_array_equal(inst.bayes, manual)


def test_target_marginal_uniform_monte_carlo():
    inst = build_instance(8, 100, sign_pattern=np.array([1, 0]))
    rng = np.random.default_rng(1)
    n = 40_000
    xs, _ = sample_target(inst, rng, n=n)
    counts = np.bincount(xs, minlength=4)
    # 3-sigma multinomial bound around n * 2/p
    expected = n / 4
    sigma = math.sqrt(n * 0.25 * 0.75)
    assert np.all(np.abs(counts - expected) <= 3 * sigma)


def test_closed_form_excess_hand_check():
    inst = build_instance(4, 100, sign_pattern=np.array([1]))
    gap = abs(2 * inst.cond_table[0] - 1)
    wrong_first = inst.bayes.copy()
    wrong_first[0] ^= 1
    assert excess_risk(inst, wrong_first) == pytest.approx((2 / 4) * gap, abs=1e-15)
    assert excess_risk(inst, inst.bayes) == 0.0


def test_degenerate_epsilon_zero():
    inst = build_instance(8, 100, sign_pattern=np.array([1, 0]), epsilon=0.0)
    assert excess_risk(inst, inst.bayes) == 0.0
    assert excess_risk(inst, 1 - inst.bayes) == 0.0


def test_plugin_positive_excess():
    rows = simulate_penalty([8], [100], trials=500, algorithm="plugin", seed=0)
    assert rows[0].mean_excess > 0.0


def test_bayes_algorithm_zero_excess():
    rows = simulate_penalty([4, 8], [50, 100], trials=50, algorithm="bayes", seed=0)
    assert all(r.mean_excess == 0.0 for r in rows)


def test_scaling_quadrupling_p_roughly_doubles_excess():
    rows = simulate_penalty([4, 16], [100], trials=500, algorithm="plugin", seed=0)
    by_p = {r.p: r.mean_excess for r in rows}
    ratio = by_p[16] / by_p[4]
    assert 1.5 <= ratio <= 2.5


def test_excess_nonincreasing_in_m0():
    rows = simulate_penalty([8], [50, 100, 200, 400], trials=500, algorithm="plugin",
                            seed=1)
    means = [r.mean_excess for r in rows]
    for prev, cur in zip(means, means[1:]):
        assert cur <= prev * 1.05  # 5% Monte-Carlo slack


def test_rows_sorted_by_p_m0():
    rows = simulate_penalty([16, 4], [100, 50], trials=10, algorithm="plugin", seed=2)
    keys = [(r.p, r.m0) for r in rows]
    assert keys == sorted(keys)


def test_p_must_be_multiple_of_four():
    with pytest.raises(ConfigError):
        build_instance(6, 100)
    with pytest.raises(ConfigError):
        build_instance(8, 0)


def test_lmsa_adapter_not_worse_than_chance():
    rng = np.random.default_rng(3)
    inst = build_instance(8, 200, sign_pattern=rng.integers(0, 2, size=2))
    xs, ys = sample_target(inst, rng)
    pred = lmsa_candidate_select(inst, xs, ys)
    assert pred.shape == inst.bayes.shape
    assert excess_risk(inst, pred) >= 0.0
    # consistency: with a huge sample the empirical selection finds the truth
    xs_big, ys_big = sample_target(inst, rng, n=400_000)
    pred_big = lmsa_candidate_select(inst, xs_big, ys_big)
    np.testing.assert_array_equal(pred_big, inst.bayes)


def test_plugin_majority_tie_and_unseen_default_zero():
    inst = build_instance(8, 10, sign_pattern=np.array([1, 1]))
    xs = np.array([0, 0, 1, 1])          # symbol 2, 3 unseen; 0 and 1 tied
    ys = np.array([0, 1, 1, 0])
    np.testing.assert_array_equal(plug_in_majority(inst, xs, ys), [0, 0, 0, 0])
