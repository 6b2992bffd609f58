import dataclasses
import json

import numpy as np
import pytest

from framepot.analytic import exact_p2
from framepot.geometry import Configuration, FieldTag, gram, potential
from framepot.solver import (
    SolverParams,
    Termination,
    derive_seed,
    make_rng,
    minimize,
    multi_start,
    propose,
    random_configuration,
)

FAST = SolverParams(max_sweeps=20_000)


def _reference_descent(m, n, p, field, params):
    """Pure-Python descent built from propose(), mirroring the step schedule."""
    rng = make_rng(params.seed)
    cfg = random_configuration(m, n, field, rng)
    delta = params.initial_step
    props = accepts = win_acc = win_cnt = 0
    while delta >= params.min_step and props < params.budget(m, n):
        ok, cfg, _ = propose(cfg, p, delta, rng)
        props += 1
        win_cnt += 1
        accepts += ok
        win_acc += ok
        if win_cnt >= params.accept_window:
            rate = win_acc / win_cnt
            if rate > params.accept_high:
                delta *= params.step_up
            elif rate < params.accept_low:
                delta *= params.step_down
            win_cnt = win_acc = 0
    return cfg, props, accepts, delta


def test_random_configuration_is_deterministic():
    a = random_configuration(5, 3, "C", make_rng(7))
    b = random_configuration(5, 3, "C", make_rng(7))
    assert a == b
    np.testing.assert_allclose(np.linalg.norm(a.vectors, axis=1), 1, atol=1e-15)
    assert random_configuration(5, 3, "C", make_rng(8)) != a


def test_random_configuration_1_1_real():
    cfg = random_configuration(1, 1, "R", make_rng(0))
    np.testing.assert_array_equal(cfg.vectors, [[1.0]])
    assert cfg.field is FieldTag.REAL and cfg.vectors.dtype == np.float64


def test_random_configuration_rejects_empty():
    with pytest.raises(ValueError):
        random_configuration(0, 2, "C", make_rng(0))


def test_propose_never_increases_potential(rng):
    cfg = random_configuration(6, 3, "C", make_rng(1))
    r = make_rng(2)
    for _ in range(500):
        before = potential(cfg, 4)
        ok, new, change = propose(cfg, 4, 0.3, r)
        after = potential(new, 4)
        if ok:
            assert change < 0 and after == pytest.approx(before + change, abs=1e-12)
        else:
            assert new is cfg and change == 0
        cfg = new


def test_propose_orthonormal_basis_is_stationary():
    cfg = Configuration(FieldTag.COMPLEX, np.eye(3))
    r = make_rng(0)
    for _ in range(200):
        ok, new, change = propose(cfg, 2, 0.5, r)
        assert not ok and new is cfg


def test_propose_rejects_bad_step():
    with pytest.raises(ValueError):
        propose(Configuration(FieldTag.REAL, np.eye(2)), 2, 0.0, make_rng(0))


@pytest.mark.parametrize("field", ["R", "C"])
def test_minimize_matches_python_reference(field):
    params = SolverParams(max_sweeps=50, seed=11)
    m, n, p = 5, 3, 4
    cfg, props, accepts, delta = _reference_descent(m, n, p, field, params)
    rep = minimize(m, n, p, field, params)
    assert (rep.proposals, rep.accepts) == (props, accepts)
    assert rep.final_step == delta
    np.testing.assert_allclose(rep.best_config.vectors, cfg.vectors, atol=1e-12)


def test_minimize_is_deterministic():
    a = minimize(6, 3, 4, "C", FAST)
    b = minimize(6, 3, 4, "C", FAST)
    assert a.numeric_payload() == b.numeric_payload()
    assert a.trace_csv() == b.trace_csv()
    c = minimize(6, 3, 4, "C", dataclasses.replace(FAST, seed=1))
    assert c.best_config != a.best_config


def test_minimize_report_invariants():
    for field in ("R", "C"):
        for p in (2, 3, 4.5, 6):
            rep = minimize(7, 3, p, field, FAST)
            cfg = rep.best_config
            assert cfg.field is FieldTag.parse(field)
            np.testing.assert_allclose(np.linalg.norm(cfg.vectors, axis=1), 1, atol=1e-12)
            assert rep.best_potential == potential(cfg, p)
            assert abs(rep.tracked_potential - rep.best_potential) <= 1e-8
            tr = rep.trace
            assert tr.shape[1] == 3 and len(tr) > 0
            assert np.all(np.diff(tr[:, 1]) <= 0)
            assert np.all(np.diff(tr[:, 0]) > 0)
            assert rep.proposals <= FAST.budget(7, 3)
            assert isinstance(rep.termination, Termination)


def test_minimize_terminates_on_step_floor():
    rep = minimize(4, 2, 2, "C", SolverParams(min_step=1e-3))
    assert rep.termination is Termination.STEP_FLOOR and rep.final_step < 1e-3


def test_minimize_terminates_on_budget():
    rep = minimize(4, 2, 2, "C", SolverParams(max_sweeps=1))
    assert rep.termination is Termination.BUDGET and rep.proposals == 8


def test_minimize_examples():
    assert minimize(2, 2, 2, "C", FAST).best_potential <= 1e-8
    assert minimize(4, 2, 2, "C", FAST).best_potential == pytest.approx(2, abs=1e-8)
    assert minimize(6, 2, 4, "C").best_potential == pytest.approx(3, rel=1e-4)


def test_minimize_p2_reaches_welch(rng):
    for m, n in [(5, 2), (7, 3), (9, 4)]:
        rep = minimize(m, n, 2, "C", FAST)
        assert rep.best_potential == pytest.approx(float(exact_p2(m, n).value), rel=1e-6)


def test_minimize_with_initial_configuration():
    start = Configuration(FieldTag.REAL, np.eye(4)[:, :3][[0, 1, 2, 0]])
    rep = minimize(4, 3, 2, "R", FAST, initial=start)
    assert rep.best_potential <= potential(start, 2)
    with pytest.raises(ValueError):
        minimize(4, 2, 2, "R", FAST, initial=start)
    with pytest.raises(ValueError):
        minimize(4, 3, 0, "R", FAST)


def test_trace_csv_format():
    rep = minimize(3, 2, 2, "C", FAST)
    lines = rep.trace_csv().splitlines()
    assert lines[0] == "proposal,potential,delta_step"
    assert len(lines) == len(rep.trace) + 1
    prop, pot, step = lines[1].split(",")
    assert int(prop) == FAST.accept_window and float(pot) >= 0 and float(step) > 0
    quiet = minimize(3, 2, 2, "C", dataclasses.replace(FAST, record_trace=False))
    assert quiet.trace is None and quiet.trace_csv().strip() == "proposal,potential,delta_step"


def test_multi_start_single_run():
    st = multi_start(3, 2, 2, "C", FAST, runs=1)
    assert st.runs == 1 and st.spread == 0
    assert st.best.best_potential == st.potentials[0]


def test_multi_start_spreads():
    for m in (3, 4):
        st = multi_start(m, 2, 2, "C", FAST, runs=5)
        assert st.spread <= 1e-6
        assert len(st.coherence_spectra) == 5
        assert st.best.best_potential == min(st.potentials)
    st = multi_start(3, 2, 2, "C", FAST, runs=5)
    for spec in st.coherence_spectra:
        np.testing.assert_allclose(spec, 0.5, atol=2e-3)


def test_multi_start_runs_are_independent_streams():
    st = multi_start(5, 3, 4, "C", FAST, runs=3)
    starts = [r.best_config.vectors.tobytes() for r in st.reports]
    assert len(set(starts)) == 3
    assert derive_seed(0, 0) != derive_seed(0, 1)
    assert derive_seed(3, 1, 2) == derive_seed(3, 1, 2)


def test_multi_start_workers_match_sequential():
    a = multi_start(5, 2, 4, "C", FAST, runs=4, workers=1)
    b = multi_start(5, 2, 4, "C", FAST, runs=4, workers=2)
    assert a.potentials == b.potentials
    assert [r.numeric_payload() for r in a.reports] == [r.numeric_payload() for r in b.reports]


def test_multi_start_rejects_zero_runs():
    with pytest.raises(ValueError):
        multi_start(3, 2, 2, "C", FAST, runs=0)


def test_params_json_round_trip():
    params = SolverParams(initial_step=0.25, max_sweeps=10, seed=2**63, record_trace=False)
    back = SolverParams.from_json(params.to_json())
    assert back == params
    assert json.loads(params.to_json())["seed"] == 2**63
    with pytest.raises(ValueError):
        SolverParams.from_dict({"bogus": 1})


@pytest.mark.parametrize(
    "kwargs",
    [dict(accept_low=0.6), dict(min_step=1.0), dict(step_up=1.0), dict(step_down=1.5),
     dict(accept_window=0), dict(max_sweeps=0), dict(seed=-1), dict(refresh_every=0)],
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        SolverParams(**kwargs)


def test_budget_rule():
    assert SolverParams().budget(10, 3) == 2_000_000
    assert SolverParams(max_sweeps=7).budget(10, 3) == 210


def test_refresh_keeps_tracked_value_exact():
    rep = minimize(8, 3, 6, "C", SolverParams(max_sweeps=5000, refresh_every=50))
    assert abs(rep.tracked_potential - rep.best_potential) <= 1e-10


def test_best_configuration_coherence_of_simplex():
    cfg = minimize(3, 2, 2, "C", FAST).best_config
    np.testing.assert_allclose(gram(cfg).offdiag_moduli, 0.5, atol=2e-3)
