import math

import numpy as np
import pytest

from weakdep_erm.acx_models import ARXModel, CovariateSpec, InnovationSpec, SupervisedData, simulate, supervised_pairs
from weakdep_erm.erm import (
    FitConfig,
    LossSpec,
    SingularDesignError,
    empirical_risk,
    erm_fit,
    loss_eval,
    risk_estimate,
)
from weakdep_erm.predictors import LinearARPredictor, ParamBox

from oracles import grid_min_three_params

P = LinearARPredictor(q=1, dx=1)
BOX = ParamBox.cube(3, 10.0)


def _arx_data(n, seed):
    traj = simulate(ARXModel(), CovariateSpec(), InnovationSpec(), n + 1, burn_in=1000, seed=seed)
    return supervised_pairs(traj, 1)


def _exact_data(theta, n=40, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 1, 2))
    y = theta[0] + X[:, 0, 0] * theta[1] + X[:, 0, 1] * theta[2]
    return SupervisedData(X, y)


# ---------------------------------------------------------------------------
# losses and risks


def test_loss_examples():
    assert loss_eval(LossSpec("absolute"), 3.0, 3.0) == 0.0
    assert loss_eval(LossSpec("squared"), 1.0, -1.0) == 4.0
    assert loss_eval(LossSpec("absolute"), 0.5, 2.0) == 1.5
    with pytest.raises(ValueError):
        LossSpec("huber")


def test_loss_constants():
    a = LossSpec("absolute", 3.0)
    s = LossSpec("squared", 3.0)
    assert (a.lipschitz, a.sup) == (1.0, 6.0)
    assert (s.lipschitz, s.sup) == (6.0, 36.0)
    with pytest.raises(ValueError):
        LossSpec("squared").sup
    assert LossSpec("squared").with_bound(2.0).sup == 16.0


def test_empirical_risk_examples():
    data = SupervisedData(np.zeros((2, 1, 2)), np.array([0.0, 2.0]))
    for c in (0.0, 0.5, 1.0, 3.0):
        assert empirical_risk(P, [c, 0, 0], data, LossSpec("squared")) == (c**2 + (c - 2) ** 2) / 2
    assert empirical_risk(P, [1.0, 0, 0], data, LossSpec("squared")) == 1.0
    theta = np.array([0.1, -0.3, 0.7])
    exact = _exact_data(theta)
    assert empirical_risk(P, theta, exact, LossSpec("absolute")) == pytest.approx(0.0, abs=1e-15)
    one = SupervisedData(np.array([[[1.0, 2.0]]]), np.array([4.0]))
    assert empirical_risk(P, theta, one, LossSpec("absolute")) == loss_eval(
        LossSpec("absolute"), 4.0, P.predict(theta, one.X[0])
    )
    with pytest.raises(ValueError):
        empirical_risk(P, theta, SupervisedData(np.zeros((0, 1, 2)), np.zeros(0)), LossSpec("absolute"))


def test_risk_estimate_same_as_empirical_risk():
    data = _arx_data(200, 3)
    th = np.array([0.2, 0.3, 0.1])
    for kind in ("absolute", "squared"):
        assert risk_estimate(P, th, data, LossSpec(kind)) == empirical_risk(P, th, data, LossSpec(kind))
    copies = SupervisedData(np.repeat(data.X[:1], 50, axis=0), np.repeat(data.y[:1], 50))
    single = loss_eval(LossSpec("squared"), data.y[0], P.predict(th, data.X[0]))
    assert risk_estimate(P, th, copies, LossSpec("squared")) == pytest.approx(single, rel=1e-14)


def test_risk_estimate_of_zero_predictor_on_noise():
    n = 100_000
    traj = simulate(ARXModel(a=(0.0,), b=(0.0,)), CovariateSpec(), InnovationSpec(), n + 1, seed=5)
    data = supervised_pairs(traj, 1)
    est = risk_estimate(P, [0.0, 0.0, 0.0], data, LossSpec("squared"))
    se = math.sqrt((9.0 / 5.0 - 1.0) / n)
    assert abs(est - 1.0) < 3 * se


def test_risk_permutation_invariance():
    data = _arx_data(500, 7)
    perm = np.random.default_rng(0).permutation(len(data))
    shuffled = SupervisedData(data.X[perm], data.y[perm])
    th = np.array([0.3, 0.2, 0.25])
    for kind in ("absolute", "squared"):
        a = empirical_risk(P, th, data, LossSpec(kind))
        b = empirical_risk(P, th, shuffled, LossSpec(kind))
        assert abs(a - b) <= 1e-12 * a


def test_risk_bounded_by_M():
    data = _arx_data(300, 1)
    B = 1.05 * max(np.abs(data.y).max(), np.abs(data.X[:, :, 0]).max())
    # clip a fit into the output range so predictions respect B_Y
    box = ParamBox((-B, 0.0, 0.0), (B, 0.0, 0.0))
    for kind in ("absolute", "squared"):
        loss = LossSpec(kind, B)
        res = erm_fit(P, box, data, loss)
        assert 0.0 <= res.empirical_risk <= loss.sup


# ---------------------------------------------------------------------------
# fitting


@pytest.mark.parametrize("kind", ["squared", "absolute"])
def test_exact_interpolation(kind):
    theta = np.array([0.4, -0.7, 1.3])
    res = erm_fit(P, BOX, _exact_data(theta), LossSpec(kind))
    np.testing.assert_allclose(res.theta, theta, atol=1e-8)
    assert res.empirical_risk == pytest.approx(0.0, abs=1e-8)
    assert not res.box_active


def test_squared_fit_solves_normal_equations():
    data = _arx_data(400, 11)
    res = erm_fit(P, BOX, data, LossSpec("squared"))
    D = P.design(data)
    resid = D.T @ (D @ res.theta - data.y)
    assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(D.T @ data.y)
    assert res.method == "closed_form_least_squares" and res.converged


def test_fit_result_risk_recomputed_exactly():
    data = _arx_data(100, 2)
    for kind in ("squared", "absolute"):
        res = erm_fit(P, BOX, data, LossSpec(kind))
        assert res.empirical_risk == empirical_risk(P, res.theta, data, LossSpec(kind))
        assert BOX.contains(res.theta)


@pytest.mark.parametrize("kind", ["squared", "absolute"])
def test_fit_beats_random_box_points(kind):
    data = _arx_data(80, 13)
    box = ParamBox.cube(3, 2.0)
    res = erm_fit(P, box, data, LossSpec(kind))
    rng = np.random.default_rng(1)
    pts = -2 + 4 * rng.random((1000, 3))
    risks = np.mean(LossSpec(kind)(data.y[:, None], P.design(data) @ pts.T), axis=0)
    assert res.empirical_risk <= risks.min() + 1e-12


@pytest.mark.parametrize("kind", ["squared", "absolute"])
def test_box_constraint_active(kind):
    theta = np.array([2.0, 0.5, 3.0])
    box = ParamBox((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
    res = erm_fit(P, box, _exact_data(theta), LossSpec(kind))
    assert box.contains(res.theta)
    assert res.box_active
    # the constrained fit is never worse than clamping the unconstrained optimum
    clamped = empirical_risk(P, box.clip(theta), _exact_data(theta), LossSpec(kind))
    assert res.empirical_risk <= clamped + 1e-12


@pytest.mark.parametrize("kind", ["squared", "absolute"])
def test_enlarging_box_never_increases_risk(kind):
    for seed in range(10):
        data = _arx_data(40, 100 + seed)
        risks = [erm_fit(P, ParamBox.cube(3, h), data, LossSpec(kind)).empirical_risk for h in (0.1, 0.3, 1.0, 10.0)]
        for small, big in zip(risks, risks[1:]):
            assert big <= small * (1 + 1e-9) + 1e-12


def test_singular_design_ridge_and_error():
    X = np.zeros((20, 1, 2))
    X[:, 0, 0] = np.arange(20.0)
    X[:, 0, 1] = 1.0  # collinear with the intercept
    y = 2.0 + 0.5 * np.arange(20.0)
    data = SupervisedData(X, y)
    res = erm_fit(P, BOX, data, LossSpec("squared"))
    assert res.ridge_used
    assert res.empirical_risk == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(SingularDesignError):
        erm_fit(P, BOX, data, LossSpec("squared"), FitConfig(ridge_fallback=False))


def test_grid_refine_close_to_nelder_mead():
    data = _arx_data(12, 4)
    loss = LossSpec("absolute")
    box = ParamBox.cube(3, 2.0)
    nm = erm_fit(P, box, data, loss, FitConfig(method="nelder_mead"))
    grid = erm_fit(P, box, data, loss, FitConfig(method="grid_refine", tolerance=1e-7, max_iterations=200))
    assert grid.empirical_risk <= nm.empirical_risk + 1e-4
    assert nm.empirical_risk <= grid.empirical_risk + 1e-4


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("kind, slack", [("squared", 1e-9), ("absolute", 1e-4)])
def test_fit_matches_dense_grid_oracle(seed, kind, slack):
    data = _arx_data(30, 1000 + seed)
    res = erm_fit(P, ParamBox.cube(3, 2.0), data, LossSpec(kind))
    oracle = grid_min_three_params(P.design(data), data.y, kind)
    assert res.empirical_risk <= oracle + slack


def test_absolute_fit_deterministic_given_seed():
    data = _arx_data(60, 8)
    a = erm_fit(P, BOX, data, LossSpec("absolute"), FitConfig(seed=5))
    b = erm_fit(P, BOX, data, LossSpec("absolute"), FitConfig(seed=5))
    assert np.array_equal(a.theta, b.theta)


def test_fit_argument_errors():
    data = _arx_data(20, 1)
    with pytest.raises(ValueError):
        erm_fit(P, ParamBox.cube(2), data, LossSpec("squared"))
    with pytest.raises(ValueError):
        erm_fit(P, BOX, data, LossSpec("absolute"), FitConfig(method="closed_form_least_squares"))
    with pytest.raises(ValueError):
        FitConfig(method="bfgs")
    with pytest.raises(ValueError):
        FitConfig(tolerance=0.0)


def test_fit_result_serialises():
    res = erm_fit(P, BOX, _arx_data(20, 1), LossSpec("squared"))
    d = res.to_dict()
    assert set(d) >= {"theta", "empirical_risk", "iterations", "converged", "box_active"}
    assert len(d["theta"]) == 3
