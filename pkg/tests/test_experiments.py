import math
from dataclasses import replace

import numpy as np
import pytest

from weakdep_erm.acx_models import ARXModel, InnovationSpec, simulate, supervised_pairs
from weakdep_erm.bounds import variance_constant_estimate
from weakdep_erm.erm import LossSpec, erm_fit, risk_estimate
from weakdep_erm.experiments import (
    CSV_HEADER,
    ExperimentConfig,
    aggregate,
    emit_csv,
    emit_replications_csv,
    emit_svg_plot,
    estimate_target,
    make_loss_sampler,
    overlay_bounds,
    paper_tarx,
    read_curve_csv,
    read_replications_csv,
    run_excess_risk_curve,
    sign_test_decrease,
    write_manifest,
)
from weakdep_erm import experiments as exp_mod
from weakdep_erm.seeding import derive_seed, make_rng, seed_sequence

SMALL = ExperimentConfig(losses=("squared",), reference_size=2000, n_grid=(50, 200), replications=4, base_seed=7)


@pytest.fixture(scope="module")
def small_result():
    return run_excess_risk_curve(replace(SMALL, losses=("absolute", "squared")))


def test_single_replication_traced_by_hand():
    cfg = replace(SMALL, n_grid=(60,), replications=1)
    res = run_excess_risk_curve(cfg)

    model, cov, inn, P = cfg.model, cfg.covariate, cfg.innovation, cfg.predictor
    ref = simulate(model, cov, inn, cfg.reference_size + 1, 1000, rng=make_rng(7, "reference"))
    ref_fit = erm_fit(P, cfg.box, supervised_pairs(ref, 1), LossSpec("squared"))
    tr = simulate(model, cov, inn, 61, 1000, rng=make_rng(7, "squared", 60, 0, "train"))
    fit = erm_fit(P, cfg.box, supervised_pairs(tr, 1), LossSpec("squared"))
    ev = simulate(model, cov, inn, 61, 1000, rng=make_rng(7, "squared", 60, 0, "eval"))
    risk = risk_estimate(P, fit.theta, supervised_pairs(ev, 1), LossSpec("squared"))

    assert res.targets["squared"].risk == ref_fit.empirical_risk
    rec = res.records[0]
    assert rec.train_risk == fit.empirical_risk and rec.eval_risk == risk
    pt = res.point("squared", 60)
    assert pt.mean_excess == abs(risk - ref_fit.empirical_risk)
    assert pt.reps == 1 and pt.sd == 0.0


def test_target_is_deterministic():
    a = estimate_target(SMALL, "absolute")
    b = estimate_target(SMALL, "absolute")
    assert np.array_equal(a.theta, b.theta) and a.risk == b.risk
    c = estimate_target(replace(SMALL, base_seed=8), "absolute")
    assert c.risk != a.risk


def test_target_of_noiseless_zero_model():
    cfg = replace(SMALL, model=ARXModel(a=(0.0,), b=(0.0,)), innovation=InnovationSpec("custom_bounded", scale=0.0))
    t = estimate_target(cfg, "squared")
    np.testing.assert_allclose(t.theta, 0.0, atol=1e-12)
    assert t.risk == pytest.approx(0.0, abs=1e-20)


def test_target_close_to_population_least_squares():
    cfg = replace(SMALL, reference_size=10_000, base_seed=3)
    t = estimate_target(cfg, "squared")
    P = cfg.predictor
    big = supervised_pairs(simulate(cfg.model, cfg.covariate, cfg.innovation, 1_000_001, rng=make_rng(99, "simulate")), 1)
    pop, *_ = np.linalg.lstsq(P.design(big), big.y, rcond=None)
    fits = []
    for r in range(30):
        tr = supervised_pairs(simulate(cfg.model, cfg.covariate, cfg.innovation, 10_001, rng=make_rng(98, r)), 1)
        fits.append(np.linalg.lstsq(P.design(tr), tr.y, rcond=None)[0])
    se = np.std(fits, axis=0, ddof=1)
    assert np.all(np.abs(t.theta - pop) < 3 * se)


def test_stream_seeds_do_not_collide():
    states = set()
    for loss in ("absolute", "squared"):
        for n in (100, 120, 400, 1600):
            for rep in range(50):
                for tag in ("train", "eval"):
                    states.add(tuple(seed_sequence(0, loss, n, rep, tag).generate_state(4)))
                states.add(derive_seed(0, loss, n, rep, "restart"))
    states.add(tuple(seed_sequence(0, "reference").generate_state(4)))
    assert len(states) == 2 * 4 * 50 * 3 + 1


def test_workers_do_not_change_results():
    one = run_excess_risk_curve(SMALL)
    two = run_excess_risk_curve(replace(SMALL, workers=2))
    assert one.points == [replace(p, wall_time=one.points[i].wall_time) for i, p in enumerate(two.points)]
    assert one.records == two.records


def test_aggregation_recomputed_from_persisted_records(small_result, tmp_path):
    path = emit_replications_csv(small_result, tmp_path / "reps.csv")
    rows = read_replications_csv(path)
    assert len(rows) == 2 * 2 * 4
    for loss in ("absolute", "squared"):
        target = small_result.targets[loss].risk
        for n in (50, 200):
            recs = [r for r in rows if r.loss == loss and r.n == n]
            mean = math.fsum(r.eval_risk for r in recs) / len(recs)
            pt = small_result.point(loss, n)
            assert pt.mean_excess == abs(mean - target)
            assert pt.sd == float(np.std([r.eval_risk for r in recs], ddof=1))


def test_aggregate_empty_and_single():
    p = aggregate("squared", 10, [], 1.0)
    assert p.reps == 0 and math.isnan(p.mean_excess)


def test_curve_csv_round_trip(small_result, tmp_path):
    rows = read_curve_csv(emit_csv(small_result, tmp_path / "c.csv"))
    assert [(r[0], r[1]) for r in rows] == [(p.loss, p.n) for p in small_result.points]
    for r, p in zip(rows, small_result.points):
        assert r[2] == p.mean_excess and r[3] == p.sd and r[4] == p.reps


def test_empty_table_writes_header_only(tmp_path):
    path = emit_csv([], tmp_path / "e.csv")
    assert path.read_text() == ",".join(CSV_HEADER) + "\n"


def test_svg_has_one_series_per_loss(small_result, tmp_path):
    text = emit_svg_plot(small_result, tmp_path / "p.svg").read_text()
    assert text.count('class="series"') == 2
    assert 'data-loss="absolute"' in text and 'data-loss="squared"' in text
    assert 'class="bound"' not in text
    overlay = overlay_bounds(small_result)
    with_bounds = emit_svg_plot(overlay, tmp_path / "o.svg", include_bounds=True, log_y=True).read_text()
    assert 'class="bound"' in with_bounds


def test_overlay_copies_empirical_and_bounds_decrease(small_result):
    overlay = overlay_bounds(small_result)
    for row in overlay.rows:
        assert row.empirical == small_result.point(row.loss, row.n).mean_excess
    for loss in ("absolute", "squared"):
        rows = [r for r in overlay.rows if r.loss == loss]
        for a, b in zip(rows, rows[1:]):
            assert b.slow_total <= a.slow_total
            assert b.fast_total <= a.fast_total
    assert overlay.constants["squared"].M == LossSpec("squared", small_result.targets["squared"].output_bound).sup


def test_few_failures_are_excluded(monkeypatch):
    cfg = replace(SMALL, n_grid=(50,), replications=200)
    real = exp_mod.run_replication

    def flaky(config, loss, n, rep, target):
        if rep == 17:
            raise FloatingPointError("synthetic")
        return real(config, loss, n, rep, target)

    monkeypatch.setattr(exp_mod, "run_replication", flaky)
    res = run_excess_risk_curve(cfg)
    pt = res.point("squared", 50)
    assert pt.reps == 199 and pt.failures == 1
    assert all(r.rep != 17 for r in res.records)


def test_many_failures_abort(monkeypatch):
    def broken(config, loss, n, rep, target):
        raise FloatingPointError("synthetic")

    monkeypatch.setattr(exp_mod, "run_replication", broken)
    with pytest.raises(RuntimeError, match="failed"):
        run_excess_risk_curve(replace(SMALL, n_grid=(50,), replications=10))


def test_sign_test_shape(small_result):
    wins, pairs, p = sign_test_decrease(small_result, "squared", 50, 200)
    assert 0 <= wins <= pairs <= 4 and 0 < p <= 1


def test_manifest_records_seed_and_targets(small_result, tmp_path):
    import json

    doc = json.loads(write_manifest(small_result, tmp_path / "m.json", extra={"note": 1}).read_text())
    assert doc["config"]["base_seed"] == 7
    assert set(doc["targets"]) == {"absolute", "squared"}
    assert doc["note"] == 1


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(n_grid=(1,))
    with pytest.raises(ValueError):
        ExperimentConfig(replications=0)
    with pytest.raises(ValueError):
        ExperimentConfig(losses=("huber",))
    assert ExperimentConfig(model=paper_tarx()).input_dim == 2


@pytest.mark.slow
def test_variance_constant_stable_across_n():
    cfg = ExperimentConfig()
    t = estimate_target(cfg, "squared")
    sampler = make_loss_sampler(cfg, t.theta, "squared")
    small = variance_constant_estimate(sampler, [1000], 2000, seed=1)
    large = variance_constant_estimate(sampler, [10_000], 2000, seed=1)
    assert abs(large / small - 1) < 0.15
