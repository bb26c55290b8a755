import numpy as np
import pytest

from batwb import identification as idn
from batwb.errors import DomainError, InfeasibleWindowError
from batwb.params import SpatialGrid, balance_positive_window, preset

GRID = SpatialGrid(n_r=8, n_x_p=4, n_x_s=3, n_x_n=4)


def _sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


# ParameterSpec only accepts cell-parameter names; any five serve as test coordinates
_NAMES = ("R_l", "R_el", "brugg", "v_td", "Ea_D_e")


def _spec(dim=5):
    return idn.ParameterSpec([idn.ParamBound(n, -5.0, 5.0) for n in _NAMES[:dim]])


def test_de_sphere():
    res = idn.optimize(_sphere, _spec(), 5000, seed=0)
    assert np.max(np.abs(res.x)) < 1e-3
    assert res.n_evals <= 5000


def test_de_deterministic_and_in_bounds():
    a = idn.optimize(_sphere, _spec(3), 600, seed=4, record=True)
    b = idn.optimize(_sphere, _spec(3), 600, seed=4, record=True)
    np.testing.assert_array_equal(a.candidates, b.candidates)
    assert a.history == b.history
    assert np.all((a.candidates >= -5.0) & (a.candidates <= 5.0))


def test_spec_log_scale_roundtrip():
    spec = idn.ParameterSpec([idn.ParamBound("D_s_p_ref", 1e-15, 1e-13, "log"),
                              idn.ParamBound("R_l", 0.0, 2.0)])
    x = np.array([3e-14, 0.7])
    np.testing.assert_allclose(spec.decode(spec.encode(x)), x, rtol=1e-12)
    with pytest.raises(DomainError):
        idn.ParamBound("R_l", 0.0, 1.0, "log")
    with pytest.raises(DomainError):
        idn.ParameterSpec([idn.ParamBound("not_a_field", 0.0, 1.0)])


@pytest.fixture(scope="module")
def dataset():
    from batwb.ocp import default_ocp

    truth = balance_positive_window(preset("nmc_graphite"))
    ocp = default_ocp("nmc")
    prof = idn.pulse_profile(truth.capacity, 1200.0, 20.0)
    return truth, ocp, idn.synthetic_dataset(truth, ocp, prof, soc0=0.9, grid=GRID)


def test_cost_at_truth(dataset):
    truth, ocp, ds = dataset
    theta = {"R_l": truth.R_l, "D_s_n_ref": truth.D_s_n_ref}
    assert idn.cost_fresh(theta, ds, base=truth, ocp=ocp, grid=GRID) < 1e-9


def test_cost_weights(dataset):
    truth, ocp, ds = dataset
    theta = {"R_l": 1.3 * truth.R_l}
    J = idn.cost_fresh(theta, ds, (1, 1, 1), truth, ocp, GRID)
    J2 = idn.cost_fresh(theta, ds, (2, 2, 2), truth, ocp, GRID)
    assert J2 == pytest.approx(2 * J, rel=1e-12)
    Jv = idn.cost_fresh(theta, ds, (1, 0, 0), truth, ocp, GRID)
    res = idn.Simulator(truth.replace(R_l=1.3 * truth.R_l), ocp, GRID,
                        idn.SimOptions(soc0=0.9)).run(ds.profile())
    assert Jv == pytest.approx(np.sqrt(np.mean((res.V - ds.V) ** 2)), rel=1e-12)


def test_small_recovery(dataset):
    truth, ocp, ds = dataset
    spec = idn.ParameterSpec.around(["R_l"], truth.to_dict(), 0.3)
    res = idn.identify_fresh(ds, truth, ocp, spec, 150, seed=2, grid=GRID)
    assert res.params["R_l"] == pytest.approx(truth.R_l, rel=0.05)


def test_two_stage_without_aged(dataset):
    truth, ocp, ds = dataset
    s1 = idn.ParameterSpec.around(["R_l"], truth.to_dict(), 0.3)
    s2 = idn.ParameterSpec.around(["theta_n_100"], truth.to_dict(), 0.05)
    out = idn.identify_two_stage(ds, [], truth, ocp, s1, s2, 60, 60, seed=0, grid=GRID)
    assert out["stage2"] == [] and "R_l" in out["stage1"].params


def test_two_stage_film_grows(nmc_ocp):
    truth = balance_positive_window(preset("nmc_graphite"))
    prof = idn.pulse_profile(truth.capacity, 1200.0, 20.0)
    fresh = idn.synthetic_dataset(truth, nmc_ocp, prof, 0.9, GRID)
    aged = [idn.synthetic_dataset(truth.replace(sei_lumped=v), nmc_ocp, prof, 0.9, GRID)
            for v in (2e-3, 5e-3)]
    s1 = idn.ParameterSpec.around(["R_l"], truth.to_dict(), 0.1)
    s2 = idn.ParameterSpec([idn.ParamBound("sei_lumped", 0.0, 1e-2)])
    out = idn.identify_two_stage(fresh, aged, truth, nmc_ocp, s1, s2, 30, 120, seed=0,
                                 grid=GRID)
    series = out["drift"]["sei_lumped"]
    assert series[1] < series[2]


def test_ocv_window_and_infeasible():
    w = idn.ocv_window({"theta_n_100": 0.85, "theta_p_100": 0.3, "Q_n": 12.5, "Q_p": 20.0},
                       10.0)
    assert w["theta_n_0"] == pytest.approx(0.05, abs=1e-15)
    with pytest.raises(InfeasibleWindowError):
        idn.ocv_window({"theta_n_100": 0.5, "theta_p_100": 0.3, "Q_n": 12.5, "Q_p": 20.0},
                       12.5 * 0.5 + 0.1)


def test_ocv_cost_at_truth(nmc_ocp):
    truth = {"theta_n_100": 0.85, "theta_p_100": 0.28, "Q_n": 5.6, "Q_p": 8.7}
    ocv = idn.synthetic_ocv(truth, 4.5, nmc_ocp)
    assert idn.cost_ocv(truth, ocv, None, nmc_ocp, anchor=False) < 1e-9
    assert idn.cost_ocv(truth, ocv, None, nmc_ocp, anchor=True) < 1e-9


def test_coulomb_count():
    soc = idn.coulomb_count(np.array([0.0, 1800.0, 3600.0]), np.array([1.0, 1.0, 0.0]), 2.0, 1.0)
    np.testing.assert_allclose(soc, [1.0, 0.75, 0.5], rtol=1e-15)
