"""Cost and diagnostics tests.

The cost route used in production (Cholesky of the Jones-overlap Gram) is
checked against direct inverse-trace and SVD routes, against the orthonormal
lower bound, and against the closed-form penalties of the symmetric families
up to 30 modes.
"""
import math

import numpy as np
import pytest

from stokesopt.errors import ConfigError, DimensionError, SingularSetError
from stokesopt.metrics import (
    SetMetrics,
    cost,
    gram,
    metrics,
    metrics_from_gram,
    penalty_db,
    variance_prediction,
)
from stokesopt.sets import (
    LaunchSet,
    mub_gram,
    mub_set,
    random_set,
    sic_gram,
    sic_search,
    yang_gram,
    yang_nolan,
)


def _sample_sets():
    return [yang_nolan(3), mub_set(3), random_set(2, seed=2),
            random_set(4, seed=2), random_set(5, seed=9)]


def test_cost_equals_inverse_gram_trace():
    for s in _sample_sets():
        direct = float(np.trace(np.linalg.inv(gram(s))))
        np.testing.assert_allclose(cost(s), direct, rtol=1e-9)


def test_metrics_routes_agree():
    # xi comes from the Gram (Cholesky), singular values from the explicit
    # Stokes matrix (SVD); they must tell the same story
    for s in _sample_sets():
        m = metrics(s)
        np.testing.assert_allclose(m.xi, np.sum(m.singular_values ** -2.0),
                                   rtol=1e-8)
        sign, logdet = np.linalg.slogdet(gram(s))
        assert sign > 0
        np.testing.assert_allclose(m.log_volume, 0.5 * logdet,
                                   rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(m.penalty, m.xi / m.m, rtol=1e-15)
        np.testing.assert_allclose(m.penalty_db, 10 * math.log10(m.penalty),
                                   rtol=1e-12)


@pytest.mark.parametrize("make", [yang_nolan, mub_set])
def test_orthonormal_stokes_rows_reach_bound(make):
    m = metrics(make(2))
    np.testing.assert_allclose(m.xi, 3.0, atol=1e-12)
    np.testing.assert_allclose(m.penalty_db, 0.0, atol=1e-12)
    np.testing.assert_allclose(m.condition_number, 1.0, atol=1e-9)
    np.testing.assert_allclose(m.log_volume, 0.0, atol=1e-12)
    assert m.bound_ok


def test_bound_and_volume_sign_hold_generally():
    for s in _sample_sets():
        m = metrics(s)
        assert m.bound_ok
        assert m.penalty >= 1.0 - 1e-12
        assert m.log_volume <= 1e-9
        if m.penalty > 1.0 + 1e-6:
            assert m.condition_number > 1.0 + 1e-6


def test_variance_prediction_scales_with_cost():
    s = sic_search(4, seed=0)
    sigma_sq = 2.5e-3
    want = sigma_sq * 2.0 * 15.0 ** 2 / 16.0  # 28.125 per measurement set
    np.testing.assert_allclose(variance_prediction(s, sigma_sq), want,
                               rtol=1e-6)
    assert variance_prediction(s, 0.0) == 0.0
    with pytest.raises(ConfigError):
        variance_prediction(s, -1.0)


def test_duplicate_states_are_singular():
    states = np.array([[1, 0], [1, 0], [0, 1]], dtype=complex)
    s = LaunchSet(n=2, states=states)
    with pytest.raises(SingularSetError):
        cost(s)
    with pytest.raises(SingularSetError):
        metrics(s)


def test_gram_entry_ranges():
    for s in _sample_sets():
        g = gram(s)
        n = s.n
        np.testing.assert_allclose(g, g.T, atol=1e-13)
        np.testing.assert_allclose(np.diag(g), 1.0, atol=1e-12)
        assert g.min() >= -1.0 / (n - 1.0) - 1e-12
        assert g.max() <= 1.0 + 1e-12
        assert np.linalg.eigvalsh(g)[0] > -1e-12


def test_thirty_mode_symmetric_families_match_closed_forms():
    sic = metrics_from_gram(sic_gram(30))
    np.testing.assert_allclose(sic.penalty_db, 10 * math.log10(2 * 899 / 900),
                               rtol=1e-10)
    assert abs(sic.penalty_db - 3.00) < 0.02
    mub = metrics_from_gram(mub_gram(30))
    np.testing.assert_allclose(mub.penalty_db, 10 * math.log10(2 * 29 / 30),
                               rtol=1e-10)
    assert abs(mub.penalty_db - 2.86) < 0.02


def test_thirty_mode_pairwise_family_penalty():
    yang = metrics_from_gram(yang_gram(30))
    direct = float(np.trace(np.linalg.inv(yang_gram(30))))
    np.testing.assert_allclose(yang.xi, direct, rtol=1e-9)
    np.testing.assert_allclose(yang.penalty_db, 5.657971, atol=1e-5)
    assert abs(yang.penalty_db - 5.65) < 0.05


def test_metrics_from_gram_matches_metrics():
    s = mub_set(3)
    a = metrics(s)
    b = metrics_from_gram(gram(s))
    assert isinstance(b, SetMetrics)
    assert (b.n, b.m) == (a.n, a.m)
    np.testing.assert_allclose(b.xi, a.xi, rtol=1e-10)
    np.testing.assert_allclose(b.singular_values, a.singular_values,
                               rtol=1e-8)
    np.testing.assert_allclose(b.log_volume, a.log_volume,
                               rtol=1e-8, atol=1e-10)


def test_metrics_from_gram_validates_shape():
    with pytest.raises(DimensionError):
        metrics_from_gram(np.eye(4)[:2])
    with pytest.raises(DimensionError):
        metrics_from_gram(np.eye(7))  # 7 + 1 is not a square


def test_penalty_db_values():
    assert penalty_db(1.0) == 0.0
    np.testing.assert_allclose(penalty_db(2.0), 10 * math.log10(2.0),
                               rtol=1e-15)
