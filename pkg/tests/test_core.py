"""Core vocabulary: hypotheses, losses, empirical evaluation, dataset files."""

import math

import numpy as np
import pytest

from msadapt.core import (
    CLASSIFICATION,
    ConfigError,
    Dataset,
    DimensionError,
    DomainCollection,
    Hypothesis,
    LossSpec,
    REGRESSION,
    empirical_loss,
    example_loss,
    example_losses,
    load_dataset,
    save_dataset,
    squared_loss,
)


def make_regression_ds(n=20, d=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = rng.normal(size=n)
    return Dataset(domain_id=1, X=X, y=y, task=REGRESSION)


def test_uniform_softmax_for_zero_parameters():
    h = Hypothesis(weights=np.zeros((3, 4)), intercept=np.zeros(3), task=CLASSIFICATION)
    p = h.predict(np.ones(4))
    np.testing.assert_allclose(p, [1 / 3, 1 / 3, 1 / 3], atol=1e-15)


def test_regression_identity_case():
    d = 5
    w = np.zeros(d)
    w[0] = 1.0
    h = Hypothesis(weights=w, intercept=0.0, task=REGRESSION)
    x = np.zeros(d)
    x[0] = 2.0
    assert h.predict(x) == 2.0


def test_softmax_hand_computed_logits():
    # logits (ln 3, 0): direct exponent sums give (3/4, 1/4)
    e = np.exp([math.log(3.0), 0.0])
    expected = e / e.sum()
    np.testing.assert_allclose(expected, [0.75, 0.25], atol=1e-15)

    h = Hypothesis(weights=np.array([[math.log(3.0)], [0.0]]), intercept=np.zeros(2),
                   task=CLASSIFICATION)
    np.testing.assert_allclose(h.predict(np.array([1.0])), [0.75, 0.25], atol=1e-12)


def test_predict_dimension_mismatch_names_both():
    h = Hypothesis(weights=np.ones(3), intercept=0.0, task=REGRESSION)
    with pytest.raises(DimensionError) as exc:
        h.predict(np.ones(5))
    assert exc.value.expected == 3
    assert exc.value.actual == 5
    assert "3" in str(exc.value) and "5" in str(exc.value)


def test_example_loss_squared_exact_prediction():
    loss = squared_loss(bound_M=4.0)
    assert example_loss(loss, 2.0, 2.0) == 0.0


def test_example_loss_zero_one_correct():
    loss = LossSpec(kind="zero-one")
    assert example_loss(loss, np.array([0.75, 0.25]), 0) == 0.0
    assert example_loss(loss, np.array([0.75, 0.25]), 1) == 1.0


def test_example_loss_zero_one_tie_breaks_low_index():
    loss = LossSpec(kind="zero-one")
    assert example_loss(loss, np.array([0.5, 0.5]), 0) == 0.0
    assert example_loss(loss, np.array([0.5, 0.5]), 1) == 1.0


def test_example_loss_squared_clipping():
    # raw value (5 - 0)^2 = 25 exceeds the bound, so the clipped loss is M
    raw = (5.0 - 0.0) ** 2
    assert raw == 25.0 and raw > 1.0
    loss = squared_loss(bound_M=1.0)
    assert example_loss(loss, 5.0, 0.0) == 1.0


def test_empirical_loss_zero_when_interpolating():
    ds = make_regression_ds()
    h = Hypothesis(weights=np.ones(3), intercept=0.5, task=REGRESSION)
    fitted = Dataset(domain_id=1, X=ds.X, y=h.predict_batch(ds.X), task=REGRESSION)
    assert empirical_loss(h, fitted, squared_loss(bound_M=10.0)) == 0.0


def test_empirical_loss_uniform_mean():
    # two examples with losses 0 and 1 under zero-one at uniform weights
    ds = Dataset(domain_id=1, X=np.array([[1.0], [1.0]]), y=np.array([0, 1]),
                 task=CLASSIFICATION, n_classes=2)
    h = Hypothesis(weights=np.array([[1.0], [-1.0]]), intercept=np.zeros(2),
                   task=CLASSIFICATION)
    per = example_losses(h, ds, LossSpec(kind="zero-one"))
    np.testing.assert_allclose(per, [0.0, 1.0])
    assert empirical_loss(h, ds, LossSpec(kind="zero-one")) == 0.5


def test_empirical_loss_weighted_dot_product():
    # losses (0, 1, 1) with weights (0.5, 0.25, 0.25): loop oracle gives 0.5
    ds = Dataset(domain_id=1, X=np.array([[1.0], [1.0], [1.0]]), y=np.array([0, 1, 1]),
                 task=CLASSIFICATION, n_classes=2)
    h = Hypothesis(weights=np.array([[1.0], [-1.0]]), intercept=np.zeros(2),
                   task=CLASSIFICATION)
    loss = LossSpec(kind="zero-one")
    weights = np.array([0.5, 0.25, 0.25])
    acc = 0.0
    for i, ex in enumerate(ds.examples()):
        acc += weights[i] * example_loss(loss, h.predict(ex.features), ex.label)
    assert acc == 0.5
    assert empirical_loss(h, ds, loss, weights=weights) == 0.5


def test_empirical_loss_affine_in_weights():
    rng = np.random.default_rng(3)
    ds = make_regression_ds(n=40, seed=3)
    h = Hypothesis(weights=rng.normal(size=3), intercept=0.1, task=REGRESSION)
    loss = squared_loss(bound_M=50.0)
    for _ in range(20):
        a = rng.dirichlet(np.ones(40))
        b = rng.dirichlet(np.ones(40))
        mid = empirical_loss(h, ds, loss, weights=(a + b) / 2)
        avg = 0.5 * (empirical_loss(h, ds, loss, weights=a)
                     + empirical_loss(h, ds, loss, weights=b))
        assert abs(mid - avg) <= 1e-12


def test_losses_bounded_by_M():
    rng = np.random.default_rng(7)
    loss = squared_loss(bound_M=0.5)
    ds = make_regression_ds(n=200, seed=7)
    h = Hypothesis(weights=rng.normal(size=3) * 10, intercept=5.0, task=REGRESSION)
    per = example_losses(h, ds, loss)
    assert np.all(per >= 0.0) and np.all(per <= 0.5)


def test_classification_predictions_on_simplex_many_draws():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(10, 4))
    for _ in range(10_000):
        h = Hypothesis(weights=rng.normal(size=(3, 4)) * 3, intercept=rng.normal(size=3),
                       task=CLASSIFICATION)
        P = h.predict_batch(X)
        assert np.all(P >= 0)
        assert np.max(np.abs(P.sum(axis=1) - 1.0)) <= 1e-9


def test_dataset_file_roundtrip_regression(tmp_path):
    ds = make_regression_ds(n=17, d=4, seed=5)
    path = tmp_path / "ds.txt"
    save_dataset(ds, path)
    back = load_dataset(path, domain_id=1)
    assert back.task == REGRESSION
    assert np.array_equal(back.X, ds.X)
    assert np.array_equal(back.y, ds.y)


def test_dataset_file_roundtrip_classification(tmp_path):
    rng = np.random.default_rng(9)
    ds = Dataset(domain_id=2, X=rng.normal(size=(11, 2)), y=rng.integers(0, 3, size=11),
                 task=CLASSIFICATION, n_classes=3)
    path = tmp_path / "cls.txt"
    save_dataset(ds, path)
    back = load_dataset(path, domain_id=2)
    assert back.n_classes == 3
    assert np.array_equal(back.X, ds.X)
    assert np.array_equal(back.y, ds.y)


def test_dataset_validation():
    with pytest.raises(ConfigError):
        Dataset(domain_id=0, X=np.empty((0, 2)), y=np.empty(0), task=REGRESSION)
    with pytest.raises(ConfigError):
        Dataset(domain_id=0, X=np.ones((2, 2)), y=np.array([0, 5]),
                task=CLASSIFICATION, n_classes=2)
    with pytest.raises(ConfigError):
        Dataset(domain_id=0, X=np.array([[np.inf, 0.0]]), y=np.array([1.0]), task=REGRESSION)


def test_collection_invariants():
    a = make_regression_ds(seed=1)
    b = make_regression_ds(n=10, d=3, seed=2)
    coll = DomainCollection(target=a, sources=(b,), task=REGRESSION)
    assert coll.p == 1 and coll.m == 10 and coll.m0 == 20
    np.testing.assert_allclose(coll.mhat, [1.0])
    with pytest.raises(ConfigError):
        DomainCollection(target=a, sources=(), task=REGRESSION)
    with pytest.raises(DimensionError):
        DomainCollection(target=a, sources=(make_regression_ds(d=2, seed=3),), task=REGRESSION)


def test_loss_spec_validation():
    assert squared_loss(regularization=1e-3).mu == pytest.approx(2e-3)
    with pytest.raises(ConfigError):
        LossSpec(kind="huber")
    with pytest.raises(ConfigError):
        LossSpec(kind="squared", bound_M=0.0)
    with pytest.raises(ConfigError):
        LossSpec(kind="squared", regularization=0.1, strong_convexity_mu=0.01)
