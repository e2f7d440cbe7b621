import numpy as np
import pytest

from kinetic_ergo import (DiffusionSpec, DriftSpec, Ensemble, IntegratorConfig,
                          kl_decay_curve, kl_knn, simulate)
from kinetic_ergo import rng
from kinetic_ergo.errors import EstimatorInputError
from kinetic_ergo.gaussian import (GaussianLaw, LinearModel, invariant_law,
                                   kl_gaussian, transition_law)


def test_identical_laws_near_zero():
    gen = rng.substream(0, 700)
    p = gen.standard_normal((10_000, 2))
    q = gen.standard_normal((10_000, 2))
    est = kl_knn(p, q)
    assert abs(est.value) < 0.05


def test_mean_shift_oracle():
    # N(1, 1) vs N(0, 1) in the position slice: true KL = 0.5
    gen = rng.substream(0, 701)
    p = gen.standard_normal((10_000, 2)) + [1.0, 0.0]
    q = gen.standard_normal((10_000, 2))
    est = kl_knn(p, q)
    assert 0.4 <= est.value <= 0.6


def test_k_validation():
    gen = rng.substream(0, 702)
    p = gen.standard_normal((50, 2))
    with pytest.raises(EstimatorInputError):
        kl_knn(p, p, k=0)
    with pytest.raises(EstimatorInputError):
        kl_knn(p, p, k=50)


def test_rigid_motion_invariance():
    gen = rng.substream(0, 703)
    p = gen.standard_normal((500, 2))
    q = gen.standard_normal((500, 2)) + [0.5, 0.0]
    theta = 0.7
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    shift = np.array([3.0, -2.0])
    a = kl_knn(p, q).value
    b = kl_knn(p @ R.T + shift, q @ R.T + shift).value
    assert a == pytest.approx(b, abs=1e-9)


def test_duplicate_points_floored():
    pts = np.zeros((20, 2))
    with pytest.warns(UserWarning):
        est = kl_knn(pts, pts + 1.0, k=3)
    assert est.floored > 0


def test_estimator_variance_shrinks_with_n():
    stds = []
    for n in (500, 2000):
        vals = []
        for s in range(12):
            gen = rng.substream(s, 704, n)
            p = gen.standard_normal((n, 2))
            q = gen.standard_normal((n, 2))
            vals.append(kl_knn(p, q).value)
        stds.append(np.std(vals))
    assert stds[1] < stds[0]


def linear_setup():
    spec = DriftSpec(d=1, linear_position=[[1.0]], friction=1.0)
    diff = DiffusionSpec(sigma=[[np.sqrt(2)]])
    model = LinearModel.from_kinetic(np.eye(1), 1.0, 2 * np.eye(1))
    return spec, diff, model


def test_decay_curve_gaussian_mode_matches_oracle():
    spec, diff, model = linear_setup()
    mubar = invariant_law(model)
    gen = rng.substream(0, 705)
    n = 10_000
    z0 = gen.standard_normal((n, 2)) + [2.0, 0.0]
    times = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0]
    cfg = IntegratorConfig(dt=1e-3, T=3.0, seed=8, snapshot_times=times)
    path = simulate(spec, diff, z0, cfg)
    ts, ests = kl_decay_curve(path, mubar)
    start = GaussianLaw(mean=[2.0, 0.0], cov=np.eye(2))
    for t, est in zip(ts, ests):
        oracle = kl_gaussian(transition_law(model, start, t), mubar)
        if oracle > 0.01:
            assert est.value == pytest.approx(oracle, rel=0.15)
        assert est.mode == "gaussian-fit"


def test_decay_curve_stationary_start():
    spec, diff, model = linear_setup()
    mubar = invariant_law(model)
    z0 = mubar.sample(10_000, rng.substream(0, 706))
    cfg = IntegratorConfig(dt=1e-3, T=1.0, seed=9,
                           snapshot_times=[0.0, 0.5, 1.0])
    path = simulate(spec, diff, z0, cfg)
    _, ests = kl_decay_curve(path, mubar)
    for est in ests:
        assert abs(est.value) < 0.05


def test_decay_curve_knn_reference_size_guard():
    spec, diff, model = linear_setup()
    z0 = rng.substream(0, 707).standard_normal((100, 2))
    cfg = IntegratorConfig(dt=1e-2, T=0.1, seed=0, snapshot_times=[0.1])
    path = simulate(spec, diff, z0, cfg)
    small_ref = Ensemble(rng.substream(0, 708).standard_normal((50, 2)))
    with pytest.raises(EstimatorInputError):
        kl_decay_curve(path, small_ref)
