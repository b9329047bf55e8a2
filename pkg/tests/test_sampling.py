import numpy as np
import pytest

from dpsparse import (
    InvalidConfigError,
    InvalidParameterError,
    RngHandle,
    SyntheticConfig,
    generate_synthetic,
    laplace,
    nu_from_zeta,
    student_t,
)

N_DRAWS = 1_000_000


def test_rng_handle_reproducible():
    a = RngHandle(seed=42, stream=3).generator().random(5)
    b = RngHandle(seed=42, stream=3).generator().random(5)
    np.testing.assert_array_equal(a, b)
    c = RngHandle(seed=42, stream=4).generator().random(5)
    assert not np.array_equal(a, c)


def test_laplace_zero_scale_is_exact_zero():
    assert laplace(0.0, RngHandle(0)) == 0.0
    np.testing.assert_array_equal(laplace(0.0, RngHandle(0), size=10), np.zeros(10))


def test_laplace_negative_scale_rejected():
    with pytest.raises(InvalidParameterError):
        laplace(-0.1, RngHandle(0))


def test_laplace_moments():
    # Lap(1): mean 0, variance 2b^2 = 2.
    draws = laplace(1.0, RngHandle(7), size=N_DRAWS)
    assert abs(draws.mean()) < 0.01
    assert abs(draws.var() - 2.0) < 0.05


def test_laplace_scaling_is_exact():
    # Inverse-CDF construction: draws at scale c*b are exactly c times draws at b.
    c = 3.7
    a = laplace(1.0, RngHandle(11), size=1000)
    b = laplace(c, RngHandle(11), size=1000)
    np.testing.assert_allclose(b, c * a, rtol=1e-15)


def test_laplace_determinism():
    a = laplace(2.0, RngHandle(5, 1), size=8)
    b = laplace(2.0, RngHandle(5, 1), size=8)
    np.testing.assert_array_equal(a, b)


def test_student_t_rejects_small_nu():
    with pytest.raises(InvalidParameterError):
        student_t(1.0, RngHandle(0))
    with pytest.raises(InvalidParameterError):
        student_t(0.5, RngHandle(0))


def test_student_t_moments_nu3():
    draws = student_t(3.0, RngHandle(13), size=N_DRAWS)
    assert abs(draws.mean()) < 0.02
    assert abs(draws.var() - 3.0) < 0.2  # Var = nu/(nu-2) = 3


def test_student_t_tail_nu175():
    # Quadrature oracle (scipy.stats.t.sf(10, 1.75)): one-sided tail 7.547e-3,
    # two-sided 1.509e-2. The empirical two-sided tail must match the
    # integral; the one-sided tail lies in (1e-4, 1e-2).
    draws = student_t(1.75, RngHandle(17), size=N_DRAWS)
    two_sided = float(np.mean(np.abs(draws) > 10.0))
    assert 0.7 * 1.509e-2 < two_sided < 1.3 * 1.509e-2
    one_sided = float(np.mean(draws > 10.0))
    assert 1e-4 < one_sided < 1e-2


def test_student_t_determinism():
    a = student_t(2.5, RngHandle(3, 2), size=6)
    b = student_t(2.5, RngHandle(3, 2), size=6)
    np.testing.assert_array_equal(a, b)


def test_nu_from_zeta_anchors_and_linear_rule():
    assert nu_from_zeta(0.5) == 1.75
    assert nu_from_zeta(1.0) == 3.0
    assert nu_from_zeta(0.25) == pytest.approx(1.5)
    assert nu_from_zeta(0.75) == pytest.approx(2.5)
    with pytest.raises(InvalidParameterError):
        nu_from_zeta(0.0)
    with pytest.raises(InvalidParameterError):
        nu_from_zeta(1.2)


def test_generate_synthetic_noiseless_model():
    cfg = SyntheticConfig(n=50, d=8, s_star=3, noise_scale=0.0, seed=9)
    ds, beta_star = generate_synthetic(cfg)
    np.testing.assert_array_equal(ds.y, ds.x @ beta_star)


def test_generate_synthetic_deterministic():
    cfg = SyntheticConfig(n=30, d=6, s_star=2, seed=21)
    ds1, b1 = generate_synthetic(cfg)
    ds2, b2 = generate_synthetic(cfg)
    np.testing.assert_array_equal(ds1.x, ds2.x)
    np.testing.assert_array_equal(ds1.y, ds2.y)
    np.testing.assert_array_equal(b1, b2)


def test_generate_synthetic_support_size():
    for seed in range(5):
        cfg = SyntheticConfig(n=5, d=40, s_star=7, seed=seed)
        _, beta_star = generate_synthetic(cfg)
        assert int((beta_star != 0).sum()) == 7


def test_generate_synthetic_ols_recovery():
    # Least squares on (n=1e4, d=10) recovers beta* well within
    # 5 * noise_scale * sqrt(d/n); classical OLS oracle.
    cfg = SyntheticConfig(n=10_000, d=10, s_star=10, zeta=1.0, noise_scale=0.5, seed=33)
    ds, beta_star = generate_synthetic(cfg)
    ols, *_ = np.linalg.lstsq(ds.x, ds.y, rcond=None)
    err = float(np.linalg.norm(ols - beta_star))
    assert err < 5 * cfg.noise_scale * np.sqrt(cfg.d / cfg.n)


def test_generate_synthetic_validates_config():
    with pytest.raises(InvalidConfigError):
        SyntheticConfig(n=10, d=5, s_star=6)
    with pytest.raises(InvalidConfigError):
        SyntheticConfig(n=10, d=5, s_star=2, zeta=0.0)
