import json

import numpy as np
import pytest

from batwb.coreshell import (CoreShellParameters, average_positive_ocp, boundary_velocity,
                             coreshell_step, initial_state, reinitialize)
from batwb.errors import (BoundaryCollisionError, DataError, DegeneratePhaseError,
                          MisalignmentError)
from batwb.espm import SimOptions, Simulator
from batwb.hybrid import (FEATURE_NAMES, HybridModel, build_residual_dataset, drive_cycle,
                          hybrid_voltage, train_hybrid)
from batwb.ocp import OCPSet, OCPTable
from batwb.timeseries import TimeSeries
from batwb.trees import (ForestOptions, TreeOptions, forest_fit, forest_predict, tree_fit,
                         tree_predict)

CSP = CoreShellParameters()


# -- core-shell ------------------------------------------------------------

def test_boundary_velocity_cases():
    assert boundary_velocity(0.0, 1e-17, 1, 200.0, 2e4) == 0.0
    v = boundary_velocity(1e9, 1e-17, 1, 200.0, 2e4)
    assert boundary_velocity(1e9, 1e-17, -1, 200.0, 2e4) == -v != 0.0
    with pytest.raises(DegeneratePhaseError):
        boundary_velocity(1e9, 1e-17, 1, 5.0, 5.0)


def test_initial_state_holds_lithium(lfp):
    for theta in (0.2, 0.5, 0.8):
        s = initial_state(theta, lfp.c_s_max_p, lfp.R_p, CSP)
        assert s.mean_concentration() == pytest.approx(theta * lfp.c_s_max_p, rel=1e-12)


def test_initial_state_outside_guards(lfp):
    with pytest.raises(BoundaryCollisionError):
        initial_state(0.999, lfp.c_s_max_p, lfp.R_p, CSP)


def test_rest_from_uniform_shell_unchanged(lfp):
    s = initial_state(0.5, lfp.c_s_max_p, lfp.R_p, CSP)
    out = coreshell_step(s, 0.0, lfp.D_s("p", 298.15), 10.0, CSP)
    assert out.r_p == pytest.approx(s.r_p, rel=1e-14)
    np.testing.assert_allclose(out.shell, s.shell, rtol=1e-14)


def test_reinitialize_keeps_lithium(lfp):
    s = initial_state(0.5, lfp.c_s_max_p, lfp.R_p, CSP, orientation=1)
    r = reinitialize(s, -1, CSP)
    assert r.orientation == -1
    assert r.total_lithium() == pytest.approx(s.total_lithium(), rel=1e-13)


def test_flux_moves_boundary_and_conserves(lfp):
    s = initial_state(0.4, lfp.c_s_max_p, lfp.R_p, CSP, orientation=1)
    D, g, dt = lfp.D_s("p", 298.15), 5e9, 1.0
    N0 = s.total_lithium()
    for _ in range(50):
        s = coreshell_step(s, g, D, dt, CSP, I=1.0)
    added = lfp.R_p ** 2 * D * g * dt * 50
    assert (s.total_lithium() - N0) / added == pytest.approx(1.0, rel=1e-8)


def test_average_ocp():
    th = np.linspace(0, 1, 5)
    ocp = OCPSet(None, OCPTable(th, 0.1 + 0 * th), OCPTable(th, 3.45 + 0 * th),
                 OCPTable(th, 3.41 + 0 * th))
    assert average_positive_ocp(0.5, ocp) == pytest.approx(3.43, abs=1e-15)
    same = OCPSet(None, OCPTable(th, 0 * th), OCPTable(th, 3.4 + th), OCPTable(th, 3.4 + th))
    assert average_positive_ocp(0.3, same) == pytest.approx(3.7, abs=1e-15)


def test_coreshell_simulation_columns(lfp, lfp_ocp, small_grid, quiet):
    prof = drive_cycle(lfp.capacity, 600.0, 5.0, seed=1)
    res = Simulator(lfp, lfp_ocp, small_grid, SimOptions(soc0=0.6, coreshell=CSP)).run(prof)
    assert res.completed
    assert np.all((res.r_p_norm > 0) & (res.r_p_norm < 1))
    assert np.max(np.abs(res.solid_li_p / res.solid_li_p[0] - 1)) < 0.5


# -- trees -----------------------------------------------------------------

def test_step_function_split():
    x = np.arange(10.0)
    y = np.where(x < 4, 1.0, 3.0)
    tree = tree_fit(x[:, None], y, TreeOptions(max_depth=1, min_leaf=1))
    assert tree.feature[0] == 0 and tree.threshold[0] == 3.5
    np.testing.assert_array_equal(tree_predict(tree, x[:, None]), y)


def test_constant_target_single_leaf():
    tree = tree_fit(np.random.default_rng(0).random((20, 3)), np.full(20, 2.5))
    assert tree.n_nodes == 1 and tree.value[0] == 2.5


def test_max_depth_zero_global_mean():
    rng = np.random.default_rng(1)
    X, y = rng.random((30, 2)), rng.random(30)
    tree = tree_fit(X, y, TreeOptions(max_depth=0, min_leaf=1))
    np.testing.assert_allclose(tree_predict(tree, rng.random((5, 2))), y.mean(), rtol=1e-15)


def test_single_tree_forest_equals_tree():
    rng = np.random.default_rng(2)
    X, y = rng.random((40, 3)), rng.random(40)
    f = forest_fit(X, y, ForestOptions(T=1, bootstrap=False, feature_rate=1.0, min_leaf=2))
    t = tree_fit(X, y, TreeOptions(f.options.max_depth, 2, 1.0))
    np.testing.assert_array_equal(forest_predict(f, X), tree_predict(t, X))


def test_identical_trees_forest_equals_tree():
    rng = np.random.default_rng(3)
    X, y = rng.random((40, 2)), rng.random(40)
    f = forest_fit(X, y, ForestOptions(T=5, bootstrap=False, feature_rate=1.0, min_leaf=2))
    np.testing.assert_allclose(forest_predict(f, X), tree_predict(f.trees[0], X), rtol=1e-15)


# -- hybrid ----------------------------------------------------------------

class _Sim(TimeSeries):
    def hysteresis_features(self):
        return np.column_stack([self[k] if k in self else np.zeros(len(self))
                                for k in FEATURE_NAMES])


def _sim(n=50):
    t = np.arange(n) * 5.0
    I = np.where(np.arange(n) % 10 < 5, 1.0, -1.0)
    return _Sim({"t": t, "I": I, "V": 3.3 + 0.001 * np.arange(n),
                 "extrapolated": np.zeros(n, bool)})


def test_residual_targets():
    sim = _sim()
    exp = TimeSeries({"t": sim.t, "I": sim.I, "V": sim.V.copy()})
    _, y, _ = build_residual_dataset(exp, sim)
    assert np.all(y == 0.0)
    exp = TimeSeries({"t": sim.t, "I": sim.I, "V": sim.V + 0.01})
    np.testing.assert_allclose(build_residual_dataset(exp, sim)[1], 0.01, rtol=1e-12)
    h = 0.015
    exp = TimeSeries({"t": sim.t, "I": sim.I, "V": sim.V + h * np.sign(sim.I)})
    y = build_residual_dataset(exp, sim)[1]
    np.testing.assert_allclose(y[sim.I > 0], h, rtol=1e-12)
    np.testing.assert_allclose(y[sim.I < 0], -h, rtol=1e-12)


def test_residual_misaligned():
    sim = _sim()
    exp = TimeSeries({"t": sim.t * 3, "I": sim.I, "V": sim.V})
    with pytest.raises(MisalignmentError):
        build_residual_dataset(exp, sim)


def test_hybrid_voltage():
    assert hybrid_voltage(3.30, 0.02) == pytest.approx(3.32, abs=1e-15)
    assert hybrid_voltage(3.30, 0.0) == 3.30
    assert hybrid_voltage(3.30) == 3.30


def test_model_roundtrip(tmp_path):
    sim = _sim(80)
    exp = TimeSeries({"t": sim.t, "I": sim.I, "V": sim.V + 0.01 * np.sign(sim.I)})
    m = train_hybrid([(exp, sim)], grid={"T": (5,), "max_depth": (3,), "min_leaf": (2,),
                                         "feature_rate": (1.0,)})
    m.save(tmp_path / "m.json")
    back = HybridModel.load(tmp_path / "m.json")
    np.testing.assert_array_equal(back.voltage(sim), m.voltage(sim))
    bad = json.loads((tmp_path / "m.json").read_text())
    bad["features"] = ["x"]
    (tmp_path / "bad.json").write_text(json.dumps(bad))
    with pytest.raises(DataError):
        HybridModel.load(tmp_path / "bad.json")
