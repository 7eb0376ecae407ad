import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edmimo import optimizer as opt
from edmimo import ser
from edmimo.constellation import make_conventional_pam


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.05, 3.0), min_size=3, max_size=6), st.data())
def test_coordinate_move_keeps_power_and_order(steps, data):
    e = np.cumsum(steps)
    e = np.concatenate([[0.0], e])
    q = np.full(e.size, 1.0 / e.size)
    e /= q @ e
    p = data.draw(st.integers(0, e.size - 1))
    lo, hi, S = opt._bracket(e, q, p, 0.0)
    frac = data.draw(st.floats(0.001, 0.999))
    t = lo + frac * (hi - lo)
    moved = opt._move(e, q, p, t, S)
    assert abs(q @ moved - 1.0) < 1e-12
    assert opt._ordered(moved, 0.0)


def test_aed_design_beats_conventional_and_trace_descends():
    prob = opt.OptimizationProblem.at_snr("aed_avg_ser", 64, 12.0, restarts=2)
    res = opt.optimize_aed(prob)
    values = [v for _, v in res.trace]
    assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))
    assert abs(res.constellation.average_power - 1.0) < 1e-12
    conv = make_conventional_pam(4)
    assert res.objective_value < opt.objective_function(prob)(conv.energies)
    # the top level grows as the design pushes the largest ratio apart
    assert res.constellation.energies[-1] > conv.energies[-1]


def test_ied_design_close_to_pam_at_high_snr():
    res = opt.optimize_ied(opt.OptimizationProblem.at_snr("ied_inst_ser", 100, 30.0, restarts=1))
    gaps = res.amplitude_gaps
    assert np.max(np.abs(gaps / gaps.mean() - 1)) < 0.05


def test_minimax_objective_is_finite_and_improves():
    prob = opt.OptimizationProblem.at_snr("minimax_gamma", 50, 15.0, restarts=1)
    res = opt.optimize_minimax_gamma(prob)
    assert np.isfinite(res.objective_value)
    assert res.objective_value <= res.initial_objective


def test_objective_rejects_invalid_energies():
    f = opt.objective_function(opt.OptimizationProblem.at_snr("aed_avg_ser", 10, 5.0))
    assert f(np.array([0.0, 2.0, 1.0, 1.0])) == np.inf


@pytest.mark.parametrize("kw", [dict(P=1), dict(priors=(0.5, 0.5)), dict(priors=(0.0, 0.2, 0.4, 0.4))])
def test_infeasible_problems(kw):
    with pytest.raises(opt.InfeasibleError):
        opt.OptimizationProblem("aed_avg_ser", 10, 0.1, **kw)


def test_unknown_objective():
    with pytest.raises(ValueError):
        opt.OptimizationProblem("fastest", 10, 0.1)


def test_restarts_are_reproducible():
    prob = opt.OptimizationProblem.at_snr("aed_avg_ser", 32, 10.0, restarts=3, seed=4)
    a, b = opt.optimize_aed(prob), opt.optimize_aed(prob)
    assert a.constellation == b.constellation
    assert ser.aed_exact_ser(1.0, 0.1, a.constellation, 32).log_average <= \
        ser.aed_exact_ser(1.0, 0.1, make_conventional_pam(4), 32).log_average
