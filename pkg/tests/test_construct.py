import numpy as np
import pytest
from scipy.optimize import brentq

from nodallab.construct import (
    ConstructionError, construct_uk, count_sign_changes, energy_function,
    hamiltonian, hamiltonian_cauchy, minimize_arc, psi,
)
from nodallab.params import ProblemParams, gamma_q


def q1_arc_oracle(lam, t, theta):
    # closed form of the positive arc for q=1, gamma=2:
    # phi'' = -4 phi - lam with phi(0) = phi(t) = 0
    g = 2.0
    return lam / g**2 * (np.cos(g * (theta - t / 2)) / np.cos(g * t / 2) - 1.0)


def test_arc_matches_q1_closed_form():
    p = ProblemParams(q=1.0, lambda_plus=3.0)
    t = 0.7
    arc = minimize_arc(p, t, t + 0.1, "plus", 2048)
    theta = arc.h * np.arange(1, arc.n + 1)
    want = q1_arc_oracle(3.0, t, theta)
    assert np.max(np.abs(arc.values - want)) < 1e-6
    # endpoint slopes: +-(lam/g) tan(g t / 2)
    slope = 3.0 / 2.0 * np.tan(1.0 * t)
    assert abs(arc.slope_left - slope) < 1e-5
    assert abs(arc.slope_right + slope) < 1e-5
    assert arc.energy < 0.0


def test_minus_arc_is_negated_plus():
    p = ProblemParams(q=1.5, lambda_plus=2.0, lambda_minus=2.0)
    plus = minimize_arc(p, 0.3, 0.6, "plus", 512)
    minus = minimize_arc(p, 0.2, 0.5, "minus", 512)
    assert np.max(np.abs(minus.values + plus.values)) < 1e-12
    assert np.all(plus.values > 0)
    assert np.all(minus.values < 0)


def test_arc_validation():
    p = ProblemParams(q=1.0)
    with pytest.raises(ValueError):
        minimize_arc(p, 0.2, 0.5, "sideways", 256)
    with pytest.raises(ConstructionError):
        # arc length at the coercivity threshold pi/gamma_q
        minimize_arc(p, np.pi / 2.0 + 0.05, np.pi / 2.0 + 0.1, "plus", 256)


def test_arc_smallness_scaling():
    # squared H1 norm of the positive arc scales like t^((2+q)/(2-q))
    p = ProblemParams(q=1.0)
    ts = np.geomspace(0.05, 0.5, 10)
    norms = []
    for t in ts:
        arc = minimize_arc(p, t, t + 0.1, "plus", 512)
        dphi = np.diff(arc.padded()) / arc.h
        norms.append(arc.h * np.sum(dphi**2))
    slope = np.polyfit(np.log(ts), np.log(norms), 1)[0]
    assert abs(slope - 3.0) < 0.1  # (2+q)/(2-q) = 3 at q=1


def test_psi_signs():
    p = ProblemParams(q=1.0, lambda_minus=4.0)
    T = 2 * np.pi / 5
    assert psi(p, 5, 0.05 * T, 512) > 0
    assert psi(p, 5, 0.95 * T, 512) < 0


def test_construct_symmetric_matching():
    p = ProblemParams(q=1.0)
    mr = construct_uk(p, 5)
    assert abs(mr.t_bar - mr.T / 2) < 1e-6
    assert mr.zero_count == 10
    assert mr.energy_drift < 1e-6
    assert abs(mr.psi_residual) < 1e-6


def test_construct_asymmetric_matching_oracle():
    # q=1, gamma=2: the matching point solves
    # lambda_+ tan(t) = lambda_- tan(T - t) in closed form
    lam_m = 4.0
    p = ProblemParams(q=1.0, lambda_minus=lam_m)
    mr = construct_uk(p, 5)
    T = mr.T
    t_exact = brentq(lambda t: np.tan(t) - lam_m * np.tan(T - t),
                     1e-6, T - 1e-6)
    assert abs(mr.t_bar - t_exact) < 1e-6
    # positive arcs get shorter when the negative phase is stronger
    assert mr.t_bar > T / 2


def test_construct_q15():
    p = ProblemParams(q=1.5)
    mr = construct_uk(p, 9)
    assert mr.zero_count == 18
    assert abs(mr.t_bar - mr.T / 2) < 1e-6  # symmetric coefficients
    # the sqrt nonlinearity at the arc endpoints limits the second order
    # scheme to O(h^1.5); at n=2048 that is a few times 1e-5
    assert mr.energy_drift < 1e-4
    assert mr.ode_residual < 1e-2


def test_construct_preconditions():
    with pytest.raises(ConstructionError):
        construct_uk(ProblemParams(q=1.0), 4)  # k_bar = 4
    with pytest.raises(ConstructionError):
        construct_uk(ProblemParams(q=1.0, lambda_minus=0.0), 5)


def test_energy_function_flags_perturbation():
    p = ProblemParams(q=1.0)
    mr = construct_uk(p, 5, n=512)
    tr = energy_function(p, mr.profile)
    drift = (tr.values.max() - tr.values.min()) / abs(tr.values.mean())
    assert drift < 1e-5
    from nodallab.fields import AngularProfile
    rng = np.random.default_rng(0)
    bad = AngularProfile(mr.profile.values + 1e-2 * rng.standard_normal(len(mr.profile.values)),
                         mr.profile.derivative, p)
    tr2 = energy_function(p, bad)
    drift2 = (tr2.values.max() - tr2.values.min()) / abs(tr2.values.mean())
    assert drift2 > 100 * drift


def test_count_sign_changes():
    assert count_sign_changes([1, -1, 1, -1]) == 4  # periodic wrap
    assert count_sign_changes([1, 0, -1, 0, 1, -1]) == 4
    assert count_sign_changes([0, 0]) == 0
    assert count_sign_changes([2, 3, 1]) == 0


def test_hamiltonian_cauchy_oracle():
    # q=1, lambda=1: piecewise parabolic, period 4 from (w, w') = (0, 1)
    p = ProblemParams(q=1.0)
    t, w, v, drift = hamiltonian_cauchy(p, 0.0, 1.0, 1e-3, 4000)
    assert drift < 1e-10
    assert abs(w[-1]) < 1e-9 and abs(v[-1] - 1.0) < 1e-9
    # peak value 1/2 at t = 1
    assert abs(w[1000] - 0.5) < 1e-9


def test_hamiltonian_cauchy_drift_q15():
    p = ProblemParams(q=1.5)
    _, _, _, drift = hamiltonian_cauchy(p, 0.7, -0.3, 1e-3, 5000)
    assert drift < 1e-8


def test_hamiltonian_values():
    p = ProblemParams(q=1.0, lambda_plus=2.0, lambda_minus=3.0)
    assert abs(hamiltonian(p, 1.0, 2.0) - (2.0 + 2.0)) < 1e-14
    assert abs(hamiltonian(p, -1.0, 0.0) - 3.0) < 1e-14


def test_hamiltonian_cauchy_validation():
    with pytest.raises(ValueError):
        hamiltonian_cauchy(ProblemParams(), 0.0, 1.0, -1e-3, 10)
