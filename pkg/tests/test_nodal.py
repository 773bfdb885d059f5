import numpy as np
import pytest

from nodallab.construct import construct_uk
from nodallab.fields import AngularProfile, ClosedFormField, NodalSet, monomial_field
from nodallab.nodal import (
    DataError, detect_singular, extract_nodal_set, nodal_length,
    profile_zero_structure,
)
from nodallab.params import ProblemParams


@pytest.fixture(scope="module")
def uk_q1():
    return construct_uk(ProblemParams(q=1.0), 5).to_field()


def test_diameter_length():
    ns = extract_nodal_set(monomial_field(1), 128)
    h = 2.0 / 127
    assert abs(nodal_length(ns, 0.5) - 1.0) < 2 * h


def test_cross_length():
    ns = extract_nodal_set(monomial_field(2), 128)
    h = 2.0 / 127
    assert abs(nodal_length(ns, 0.5) - 2.0) < 4 * h


def test_circle_length():
    f = ClosedFormField(lambda x, y: x * x + y * y - 0.25,
                        lambda x, y: (2 * x, 2 * y))
    n = 128
    ns = extract_nodal_set(f, n)
    h = 2.0 / (n - 1)
    assert abs(nodal_length(ns, 1.0) - np.pi) < 5 * h


def test_extract_validation():
    with pytest.raises(ValueError):
        extract_nodal_set(monomial_field(1), 32)
    bad = ClosedFormField(lambda x, y: np.where(x > 0, np.nan, x),
                          lambda x, y: (1.0 + 0 * x, 0 * y))
    with pytest.raises(DataError):
        extract_nodal_set(bad, 64)


def test_empty_nodal_length():
    assert nodal_length(NodalSet([], []), 0.5) == 0.0


def test_uk_ray_lengths(uk_q1):
    ns = extract_nodal_set(uk_q1, 256)
    # 2k rays of length 1/2 inside B_{1/2}
    assert abs(nodal_length(ns, 0.5) - 5.0) < 0.25
    # homogeneity: length scales linearly in the clip radius
    per_rho = [nodal_length(ns, rho) / rho for rho in (0.25, 0.5, 0.75)]
    assert max(per_rho) / min(per_rho) < 1.05


def test_refinement_improves_length(uk_q1):
    e1 = abs(nodal_length(extract_nodal_set(uk_q1, 128), 0.5) - 5.0)
    e2 = abs(nodal_length(extract_nodal_set(uk_q1, 256), 0.5) - 5.0)
    assert e2 < e1


def test_detect_singular_examples(uk_q1):
    assert detect_singular(monomial_field(1), 128) == []
    got = detect_singular(monomial_field(2), 128)
    assert len(got) == 1
    assert np.hypot(got[0][0], got[0][1]) < 0.05
    got = detect_singular(uk_q1, 256)
    assert len(got) == 1
    assert np.hypot(got[0][0], got[0][1]) < 0.05


def test_detect_singular_thresholds():
    with pytest.raises(ValueError):
        detect_singular(monomial_field(1), 128, eps_u=0.0, eps_g=1.0)


def test_profile_zero_structure_cos():
    prof = AngularProfile.from_callable(
        lambda t: np.cos(2 * t), lambda t: -2 * np.sin(2 * t))
    got = profile_zero_structure(prof)
    assert len(got["zeros"]) == 4
    assert got["antipodal"]
    assert not got["degenerate"]
    want = [np.pi / 4, 3 * np.pi / 4, 5 * np.pi / 4, 7 * np.pi / 4]
    assert np.allclose(sorted(got["zeros"]), want, atol=1e-6)
    assert all(abs(abs(s) - 2.0) < 1e-3 for s in got["slopes"])


def test_profile_zero_structure_glued():
    mr = construct_uk(ProblemParams(q=1.0), 5, n=512)
    got = profile_zero_structure(mr.profile)
    assert len(got["zeros"]) == 10
    assert all(s != 0 for s in got["slopes"])
    assert got["antipodal"]  # 10 zeros of a T-periodic pattern, T = 2 pi / 5


def test_profile_zero_structure_degenerate():
    got = profile_zero_structure(AngularProfile(np.zeros(32), np.zeros(32)))
    assert got["zeros"] == []
    assert got["degenerate"]
