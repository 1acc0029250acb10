import math

import numpy as np
import pytest

from dmlpg.problems import (
    ErrorReport,
    FgmParams,
    NotApplicable,
    convergence_study,
    fgm_problem,
    fgm_series_solution,
    fgm_steady_state,
    fitted_order,
    least_squares_order,
    manufactured_problem,
    nodal_errors,
    steady_error,
    test_problem,
    timing_study,
)

P = FgmParams()


# mpmath sums of the series to 30 digits
@pytest.mark.parametrize(
    "frac, value",
    [(0.5, 0.28832649465084859719), (0.25, 0.10420050431138987052), (0.75, 0.59641812893644469401)],
)
def test_series_matches_high_precision_sum(frac, value):
    assert fgm_series_solution(P, frac * P.a, 10.5) == pytest.approx(value, abs=1e-12)


def test_series_limits_and_boundaries():
    x = np.linspace(0, P.a, 9)
    np.testing.assert_allclose(fgm_series_solution(P, x, 1e6), x / P.a, atol=1e-12)
    assert fgm_series_solution(P, 0.0, 5.0) == pytest.approx(0.0, abs=1e-14)
    assert fgm_series_solution(P, P.a, 5.0) == pytest.approx(P.T, abs=1e-12)
    # a fixed short sum agrees with the adaptive one once terms are negligible
    assert fgm_series_solution(P, 0.5 * P.a, 30.0, n_terms=40) == pytest.approx(
        fgm_series_solution(P, 0.5 * P.a, 30.0), abs=1e-12
    )


def test_series_rejects_graded_and_negative_time():
    with pytest.raises(NotApplicable):
        fgm_series_solution(FgmParams(gamma=20.0), 0.01, 10.0)
    with pytest.raises(ValueError):
        fgm_series_solution(P, 0.01, -1.0)


def test_steady_state_profile():
    for gamma in (0.0, 20.0, 50.0, 100.0):
        p = FgmParams(gamma=gamma)
        assert fgm_steady_state(p, 0.0) == pytest.approx(0.0, abs=1e-15)
        assert fgm_steady_state(p, p.a) == pytest.approx(p.T, rel=1e-14)
    # closed form at 40 digits for gamma = 50 at the mid-plane
    assert fgm_steady_state(FgmParams(gamma=50.0), 0.02) == pytest.approx(0.73105857863000487925, rel=1e-14)
    # the gamma -> 0 limit is linear
    assert fgm_steady_state(FgmParams(gamma=1e-9), 0.01) == pytest.approx(0.25, rel=1e-8)


def test_steady_state_solves_the_graded_equation():
    p = FgmParams(gamma=50.0)
    x, eps = 0.013, 1e-6
    flux = lambda s: math.exp(p.gamma * s) * (fgm_steady_state(p, s + eps) - fgm_steady_state(p, s - eps)) / (2 * eps)  # noqa: E731
    assert flux(x) == pytest.approx(flux(0.031), rel=1e-6)


def test_fgm_params_validation_and_probes():
    with pytest.raises(ValueError):
        FgmParams(a=0.0)
    with pytest.raises(ValueError):
        FgmParams(gamma=math.inf)
    assert P.alpha0 == pytest.approx(1.7e-5)
    np.testing.assert_allclose(P.probes()[:, 0] / P.a, [0.25, 0.5, 0.75])


def test_fgm_problem_data():
    prob = fgm_problem(FgmParams(gamma=20.0))
    x = np.array([[0.0, 0.01], [0.04, 0.02]])
    np.testing.assert_allclose(prob.dirichlet(x, 1.0), [0.0, 1.0])
    np.testing.assert_allclose(prob.conductivity(x), 17 * np.exp(20 * x[:, 0]))
    np.testing.assert_allclose(prob.conductivity_gradient(x)[:, 0], 20 * prob.conductivity(x))
    assert prob.exact is None
    assert fgm_problem(P).exact is not None


def test_test_problem_satisfies_its_equation():
    prob = test_problem()
    x = np.array([[0.3, 0.7]])
    t, eps = 0.4, 1e-5
    u_t = (prob.exact(x, t + eps) - prob.exact(x, t - eps)) / (2 * eps)
    lap = sum(
        (prob.exact(x + d, t) - 2 * prob.exact(x, t) + prob.exact(x - d, t)) / eps**2
        for d in (np.array([eps, 0.0]), np.array([0.0, eps]))
    )
    assert 2 * math.pi**2 * u_t[0] == pytest.approx(lap[0], rel=1e-4)
    np.testing.assert_allclose(prob.dirichlet_rate(x, t), -prob.exact(x, t))
    top = np.array([[0.3, 1.0]])
    assert prob.neumann(top, t, np.array([[0.0, 1.0]]))[0] == pytest.approx(0.0, abs=1e-14)


def test_manufactured_problem_data():
    prob = manufactured_problem()
    x = np.array([[0.5, 0.2]])
    assert prob.exact(x)[0] == 0.25
    assert prob.source(x, 0.0)[0] == -2.0


def test_order_helpers():
    assert fitted_order(4e-2, 1e-2) == pytest.approx(2.0)
    assert math.isnan(fitted_order(0.0, 1.0))
    h = np.array([0.2, 0.1, 0.05])
    assert least_squares_order(h, 3 * h**1.5) == pytest.approx(1.5)
    assert nodal_errors([1.0, 2.0], [1.0, 0.0]) == (2.0, pytest.approx(math.sqrt(2)))


def test_error_report():
    r = ErrorReport()
    r.add(0.2, [1.0, 1.04], [1.0, 1.0])
    r.add(0.1, [1.0, 1.01], [1.0, 1.0])
    assert math.isnan(r.orders[0]) and r.orders[1] == pytest.approx(2.0)
    assert r.fitted == pytest.approx(2.0)
    assert len(r.rows()) == 2 and r.rows()[1][0] == 0.1


def test_convergence_study_refines():
    r = convergence_study("dmlpg1", [0.2, 0.1], dt=0.01)
    assert r.max_err[1] < r.max_err[0]
    with pytest.raises(ValueError):
        convergence_study("dmlpg1", [0.2], dt=0.01, problem=fgm_problem(FgmParams(gamma=5.0)))


def test_steady_error_and_timing():
    assert steady_error("dmlpg5") < 1e-8
    rows = timing_study("dmlpg2", [0.2], dt=0.1)
    assert rows[0].n_nodes == 36 and rows[0].assembly > 0 and rows[0].method == "dmlpg2"
