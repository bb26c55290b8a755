import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from batwb.errors import DataError, DomainError, NoChargeEventError, WindowTooShortError
from batwb.gp import (GPOptions, bag_fit, bag_predict, gp_fit, gp_predict, load_ensemble,
                      save_ensemble)
from batwb.soh import (SegmentOptions, error_metrics, extract_features, mrmr_rank,
                       segment_charge, soh, synthetic_fleet, window_stats)
from batwb.timeseries import TimeSeries


# -- GP --------------------------------------------------------------------

def test_constant_function():
    X = np.linspace(0, 5, 12)[:, None]
    m = gp_fit(X, np.full(12, 3.7))
    mu, _ = gp_predict(m, np.linspace(-2, 8, 50)[:, None])
    np.testing.assert_allclose(mu, 3.7, atol=1e-6)


def test_sine_regression():
    X = np.linspace(0, 2 * np.pi, 20)[:, None]
    m = gp_fit(X, np.sin(X[:, 0]), GPOptions(noise_var=1e-6))
    xs = np.linspace(0, 2 * np.pi, 400)[:, None]
    mu, _ = gp_predict(m, xs)
    assert np.sqrt(np.mean((mu - np.sin(xs[:, 0])) ** 2)) < 1e-2


def test_training_point_variance_bound():
    rng = np.random.default_rng(0)
    X = rng.random((8, 2))
    m = gp_fit(X, rng.random(8), GPOptions(optimize=False, normalize_y=False))
    _, v = gp_predict(m, X)
    assert np.all(v <= m.noise_var + 1e-8)


def test_batch_equals_pointwise():
    rng = np.random.default_rng(1)
    X = rng.random((10, 2))
    m = gp_fit(X, rng.random(10))
    Xs = rng.random((6, 2))
    mu, v = gp_predict(m, Xs)
    pts = [gp_predict(m, x[None, :]) for x in Xs]
    np.testing.assert_allclose(mu, [p[0][0] for p in pts], rtol=1e-12)
    np.testing.assert_allclose(v, [p[1][0] for p in pts], rtol=1e-12)


def test_gp_rejects_bad_input():
    with pytest.raises(DataError):
        gp_fit(np.array([[0.0], [np.nan]]), np.array([1.0, 2.0]))


def test_identical_members_equal_single():
    rng = np.random.default_rng(2)
    X, y = rng.random((15, 1)), rng.random(15)
    one = bag_fit(X, y, B=1, bootstrap=False)
    many = bag_fit(X, y, B=4, bootstrap=False)
    xs = np.linspace(0, 1, 9)[:, None]
    np.testing.assert_allclose(bag_predict(many, xs)[0], bag_predict(one, xs)[0], rtol=1e-12)


def test_bag_variance_at_least_member_mean():
    rng = np.random.default_rng(3)
    X, y = rng.random((20, 1)), rng.random(20)
    ens = bag_fit(X, y, B=5, seed=1, opts=GPOptions(n_restarts=0))
    mu, var, M, V = bag_predict(ens, np.linspace(0, 1, 7)[:, None], return_members=True)
    assert np.all(var >= V.mean(0) - 1e-15)


def test_bag_requires_members():
    with pytest.raises(DomainError):
        bag_fit(np.zeros((3, 1)), np.zeros(3), B=0)


def test_ensemble_roundtrip_deterministic(tmp_path):
    rng = np.random.default_rng(4)
    X, y = rng.random((12, 2)), rng.random(12)
    xs = rng.random((5, 2))
    ens = bag_fit(X, y, B=3, seed=9, opts=GPOptions(n_restarts=1))
    save_ensemble(ens, tmp_path / "a.json")
    save_ensemble(bag_fit(X, y, B=3, seed=9, opts=GPOptions(n_restarts=1)), tmp_path / "b.json")
    assert (tmp_path / "a.npz").read_bytes() == (tmp_path / "b.npz").read_bytes()
    back, _ = load_ensemble(tmp_path / "a.json")
    np.testing.assert_array_equal(bag_predict(back, xs)[0], bag_predict(ens, xs)[0])


# -- SOH features ----------------------------------------------------------

def _cccv(n_rest=3, n_cc=60, n_cv=40, dt=10.0):
    I = np.concatenate((np.zeros(n_rest), np.full(n_cc, -1.0),
                        -np.exp(-np.arange(n_cv) / 15.0), np.zeros(2)))
    V = np.concatenate((np.full(n_rest, 3.5), np.linspace(3.6, 4.2, n_cc),
                        np.full(n_cv, 4.2), np.full(2, 4.1)))
    t = np.arange(I.size) * dt
    return TimeSeries({"t": t, "I": I, "V": V}), n_rest + n_cc


def test_switch_detection():
    rec, k_switch = _cccv()
    seg = segment_charge(rec, SegmentOptions(cc_window=(0, 300), cv_window=(0, 200)))
    assert abs(seg.switch_index - k_switch) <= 1
    assert not seg.cv_empty


def test_cc_only_flagged():
    I = np.concatenate((np.zeros(2), np.full(50, -1.0), np.zeros(3)))
    V = np.concatenate((np.full(2, 3.5), np.linspace(3.6, 4.1, 50), np.full(3, 4.0)))
    rec = TimeSeries({"t": np.arange(I.size) * 10.0, "I": I, "V": V})
    seg = segment_charge(rec, SegmentOptions(cc_window=(0, 300)))
    assert seg.cv_empty and seg.switch_index is None
    fv = extract_features(seg)
    assert fv.missing[6:].all() and not fv.missing[:6].any()


def test_rest_only_error():
    rec = TimeSeries({"t": np.arange(10.0), "I": np.zeros(10), "V": np.full(10, 3.6)})
    with pytest.raises(NoChargeEventError):
        segment_charge(rec)


def test_window_too_short():
    rec, _ = _cccv(n_cc=10)
    with pytest.raises(WindowTooShortError):
        segment_charge(rec, SegmentOptions(cc_window=(0, 1200)))


def test_window_stats_constant_and_ramp():
    t = np.arange(0.0, 300.0, 10.0)
    s = window_stats(t, np.full(t.size, 3.6))
    assert s[0] == pytest.approx(3.6) and s[1] == 0.0 and s[4] == 0.0
    s = window_stats(t, 3.5 + 2e-4 * t)
    assert s[1] == pytest.approx(2e-4, abs=1e-9)
    assert s[2] == pytest.approx(0.0, abs=1e-12)


def test_features_ignore_time_offset():
    rec, _ = _cccv()
    shifted = TimeSeries({"t": rec.t + 1e5, "I": rec.I, "V": rec.V})
    o = SegmentOptions(cc_window=(0, 300), cv_window=(0, 200))
    a = extract_features(segment_charge(rec, o)).values
    b = extract_features(segment_charge(shifted, o)).values
    np.testing.assert_allclose(a, b, rtol=1e-12)


# -- ranking and metrics ---------------------------------------------------

def test_mrmr_duplicate_target_first():
    rng = np.random.default_rng(0)
    y = rng.random(50)
    F = np.column_stack((rng.random(50), y, rng.random(50)))
    assert mrmr_rank(F, y, 1) == [1]


def test_mrmr_permutation():
    rng = np.random.default_rng(1)
    F, y = rng.random((30, 5)), rng.random(30)
    assert sorted(mrmr_rank(F, y)) == list(range(5))


def test_mrmr_redundancy_penalty():
    rng = np.random.default_rng(2)
    y = rng.standard_normal(200)
    strong = y + 0.3 * rng.standard_normal(200)
    weak = 0.5 * y + rng.standard_normal(200)
    F = np.column_stack((strong, strong, weak))
    # scores after picking column 0: column 1 gets |r| - 1 < 0, column 2 gets
    # |r_weak| - |corr(weak, strong)| > 0
    assert mrmr_rank(F, y) == [0, 2, 1]


def test_mrmr_rejects_constant_column():
    rng = np.random.default_rng(3)
    F = np.column_stack((rng.random(10), np.ones(10)))
    with pytest.raises(DataError):
        mrmr_rank(F, rng.random(10))


def test_soh_values():
    assert soh(0.37, 0.74) == pytest.approx(50.0, abs=1e-12)
    assert soh(0.74, 0.74) == pytest.approx(100.0, abs=1e-12)
    with pytest.raises(DomainError):
        soh(0.5, 0.0)


@given(st.lists(st.floats(0.5, 2.0), min_size=1, max_size=20))
def test_metrics_zero_on_perfect(y):
    assert error_metrics(y, y) == (0.0, 0.0, 0.0)


def test_metrics_values():
    rmse, rmspe, mape = error_metrics([1.0, 2.0], [1.1, 2.0])
    assert rmse == pytest.approx(np.sqrt(0.01 / 2))
    assert rmspe == pytest.approx(100 * np.sqrt(0.01 / 2))
    assert mape == pytest.approx(10.0)


def test_fleet_features_track_capacity():
    records, caps, _ = synthetic_fleet(12, seed=3)
    o = SegmentOptions(cc_window=(0, 600), cv_window=(0, 200))
    F = np.array([extract_features(segment_charge(r, o)).values for r in records])
    assert np.all(np.isfinite(F))
    best = mrmr_rank(F, caps, 1)[0]
    assert abs(np.corrcoef(F[:, best], caps)[0, 1]) > 0.8
