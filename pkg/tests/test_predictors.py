import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weakdep_erm.acx_models import SupervisedData
from weakdep_erm.predictors import (
    FeatureBasisPredictor,
    HolderClassParams,
    LinearARPredictor,
    ParamBox,
    class_lipschitz,
    covering_log_count_holder,
    covering_log_count_parametric,
    covering_net,
    identity_lag_basis,
    polynomial_basis,
    sup_norm_bound,
)

P = LinearARPredictor(q=1, dx=1)


def _X(y, chi):
    return np.array([[y, chi]])


def test_constant_parameter_gives_constant():
    for X in (_X(0.0, 0.0), _X(5.0, -3.0)):
        assert P.predict([1.7, 0.0, 0.0], X) == 1.7


def test_pass_through_lag():
    assert P.predict([0.0, 1.0, 0.0], _X(2.0, 9.0)) == 2.0


def test_hand_arithmetic_prediction():
    assert P.predict([0.3, 0.25, 0.8], _X(1.0, 2.0)) == pytest.approx(2.15, abs=1e-15)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        P.predict([0.0, 1.0], _X(1.0, 1.0))
    with pytest.raises(ValueError):
        P.predict([0.0, 1.0, 0.0], np.zeros((1, 3)))
    assert LinearARPredictor(q=2, dx=3).dim == 9


@settings(max_examples=50, deadline=None)
@given(
    t1=st.lists(st.floats(-5, 5), min_size=5, max_size=5),
    t2=st.lists(st.floats(-5, 5), min_size=5, max_size=5),
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
)
def test_prediction_is_affine(t1, t2, a, b):
    pred = LinearARPredictor(q=2, dx=1)
    X = np.array([[0.7, -1.2], [2.0, 0.3]])
    t1, t2 = np.array(t1), np.array(t2)
    # affine in theta means predict(a t1 + b t2) = a predict(t1) + b predict(t2) for the linear part;
    # the intercept enters linearly too, so the identity holds exactly up to rounding
    lhs = pred.predict(a * t1 + b * t2, X)
    rhs = a * pred.predict(t1, X) + b * pred.predict(t2, X)
    scale = 1 + abs(a) * np.abs(t1).sum() * 3 + abs(b) * np.abs(t2).sum() * 3
    assert abs(lhs - rhs) <= 1e-13 * scale


def test_predict_many_matches_predict():
    pred = LinearARPredictor(q=2, dx=2)
    rng = np.random.default_rng(0)
    data = SupervisedData(rng.normal(size=(20, 2, 3)), rng.normal(size=20))
    theta = rng.normal(size=pred.dim)
    many = pred.predict_many(theta, data)
    single = [pred.predict(theta, x) for x in data.X]
    np.testing.assert_allclose(many, single, rtol=0, atol=1e-13)


def test_feature_basis_reduces_to_linear_ar():
    q, dx = 2, 1
    basis = FeatureBasisPredictor(identity_lag_basis(q, dx), (1 + dx,) * (q + 1), memory=q)
    lin = LinearARPredictor(q=q, dx=dx)
    rng = np.random.default_rng(1)
    data = SupervisedData(rng.normal(size=(15, q, 1 + dx)), np.zeros(15))
    th = rng.normal(size=lin.dim)
    # identity basis carries an unused slot in the constant block
    th_basis = np.concatenate([[th[0], 0.0], th[1:]])
    np.testing.assert_allclose(basis.predict_many(th_basis, data), lin.predict_many(th, data), atol=1e-13)
    assert basis.predict(th_basis, data.X[0]) == pytest.approx(lin.predict(th, data.X[0]), abs=1e-13)


def test_polynomial_basis_shapes():
    maps = polynomial_basis(1, 1, degree=3)
    pred = FeatureBasisPredictor(maps, (1, 6))
    X = np.array([[[2.0, -1.0]]])
    th = np.zeros(7)
    th[0] = 1.0
    th[3] = 1.0  # Y^2 coefficient within the lag block (Y, chi, Y^2, chi^2, Y^3, chi^3)
    assert pred.predict(th, X[0]) == pytest.approx(1.0 + 4.0)


# ---------------------------------------------------------------------------
# class constants


def test_class_lipschitz_examples():
    assert class_lipschitz(P, ParamBox((0.0,) * 3, (0.0,) * 3)) == 0.0
    assert class_lipschitz(P, ParamBox.cube(3, 1.0)) == 1.0
    box = ParamBox((-5.0, -0.2, -0.3), (5.0, 0.5, 0.3))
    assert class_lipschitz(P, box) == 0.5


def _input_norm(X):
    # sum over lags of |y| + |chi|_1
    return float(np.abs(X).sum())


def test_class_lipschitz_certifies_random_triples():
    pred = LinearARPredictor(q=2, dx=2)
    box = ParamBox((-1, -0.5, -2, 0, -0.1, 0.3, -1), (1, 0.7, 1, 1.5, 0.1, 0.4, 1))
    K = class_lipschitz(pred, box)
    rng = np.random.default_rng(2)
    lo, hi = np.array(box.lower), np.array(box.upper)
    for _ in range(10_000):
        th = lo + (hi - lo) * rng.random(pred.dim)
        X, Xp = rng.normal(size=(2, 2, 3)) * 3
        diff = abs(pred.predict(th, X) - pred.predict(th, Xp))
        assert diff <= K * _input_norm(X - Xp) * (1 + 1e-12) + 1e-12


def test_sup_norm_examples():
    assert sup_norm_bound(P, ParamBox((0.0,) * 3, (0.0,) * 3), (-4, 4)) == 0.0
    assert sup_norm_bound(P, ParamBox((1.0, 0.0, 0.0), (1.0, 0.0, 0.0)), (-100, 100)) == 1.0
    assert sup_norm_bound(P, ParamBox.cube(3, 1.0), (-2, 2)) == 5.0


def test_sup_norm_never_underestimates_grid():
    box = ParamBox((-0.5, -1.0, 0.2), (1.5, 0.3, 0.9))
    inputs = [(-1.0, 3.0), (0.5, 2.0)]
    bound = sup_norm_bound(P, box, inputs)
    g = [np.linspace(a, b, 7) for a, b in zip(box.lower, box.upper)]
    xs = [np.linspace(a, b, 7) for a, b in inputs]
    best = 0.0
    for t0 in g[0]:
        for t1 in g[1]:
            for t2 in g[2]:
                for y in xs[0]:
                    for c in xs[1]:
                        best = max(best, abs(P.predict([t0, t1, t2], _X(y, c))))
    assert best <= bound
    # attained at corners for an affine class
    assert best == pytest.approx(bound)


def test_sup_norm_unbounded_input():
    with pytest.raises(ValueError):
        sup_norm_bound(P, ParamBox.cube(3), (-np.inf, 1.0))


def test_param_box_validation():
    with pytest.raises(ValueError):
        ParamBox((1.0,), (0.0,))
    with pytest.raises(ValueError):
        ParamBox((0.0,), (np.inf,))
    box = ParamBox.cube(2, 1.0)
    assert box.on_boundary([1.0, 0.0]) and not box.on_boundary([0.5, 0.0])
    assert len(list(box.corners())) == 4


# ---------------------------------------------------------------------------
# covering numbers


def test_parametric_covering_examples():
    assert covering_log_count_parametric(ParamBox((0.0,), (2.0,)), 1.0, [1.0]) == 0.0
    zero = ParamBox((1.0, 2.0, 3.0), (1.0, 2.0, 3.0))
    assert covering_log_count_parametric(zero, 0.01, [1.0, 1.0, 1.0]) == 0.0
    box = ParamBox.cube(3, 1.0)
    # widths 2, G = (1, 2, 2), d = 3: counts ceil(30), ceil(60), ceil(60)
    expected = math.log(30) + 2 * math.log(60)
    assert covering_log_count_parametric(box, 0.1, [1.0, 2.0, 2.0]) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(ValueError):
        covering_log_count_parametric(box, 0.0, [1.0, 1.0, 1.0])


@pytest.mark.parametrize("width, G, eps", [(2.0, 1.0, 0.1), (3.0, 2.5, 0.07), (1.0, 1.0, 0.5)])
def test_parametric_covering_matches_greedy_slice(width, G, eps):
    # greedy covering of a one-parameter slice is optimal on an interval
    lo, hi = 0.0, width
    count, covered = 0, lo
    while covered < hi - 1e-12:
        count += 1
        covered += 2 * eps / G
    assert covering_log_count_parametric(ParamBox((lo,), (hi,)), eps, [G]) == pytest.approx(math.log(count))


def test_parametric_net_is_valid():
    box = ParamBox((-1.0, 0.0, -0.5), (1.0, 0.4, 0.5))
    G = np.array([1.0, 3.0, 2.0])
    eps = 0.3
    net = covering_net(box, eps, G)
    assert math.log(len(net)) == pytest.approx(covering_log_count_parametric(box, eps, G))
    rng = np.random.default_rng(4)
    lo, hi = np.array(box.lower), np.array(box.upper)
    for _ in range(2000):
        th = lo + (hi - lo) * rng.random(3)
        dist = np.min((np.abs(net - th) * G).sum(axis=1))
        assert dist <= eps + 1e-12


def test_holder_covering_examples():
    for d, s in [(1, 1), (3, 2), (5, 0.5)]:
        assert covering_log_count_holder(HolderClassParams(s=s, d=d, C0=1.0), 1.0) == 1.0
    p = HolderClassParams(s=2.0, d=3)
    ratio = covering_log_count_holder(p, 0.05) / covering_log_count_holder(p, 0.1)
    assert ratio == pytest.approx(2 ** p.exponent, rel=1e-14)
    assert covering_log_count_holder(HolderClassParams(s=6, d=3, C0=1), 0.25) == pytest.approx(4.0, rel=1e-15)
    with pytest.raises(ValueError):
        covering_log_count_holder(p, 0.0)
    with pytest.raises(ValueError):
        HolderClassParams(s=0)


@settings(max_examples=40, deadline=None)
@given(u=st.floats(0.01, 0.99), du=st.floats(1e-3, 0.5), d=st.integers(1, 6), s=st.floats(0.5, 4))
def test_holder_covering_monotone(u, du, d, s):
    p = HolderClassParams(s=s, d=d)
    assert covering_log_count_holder(p, u + du) < covering_log_count_holder(p, u)
    q = HolderClassParams(s=s, d=d + 1)
    assert covering_log_count_holder(q, u) > covering_log_count_holder(p, u)
