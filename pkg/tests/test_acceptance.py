"""Acceptance criteria; each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary section
at the end of the session lists all twelve lines.
"""

import time
import warnings

import numpy as np
import pytest

from batwb import identification as idn
from batwb.cli import main as cli_main
from batwb.coreshell import CoreShellParameters, coreshell_step, initial_state
from batwb.degradation import AgingParameters, cycle_aging
from batwb.espm import (ParticleGeometry, SimOptions, Simulator, constant_current_profile,
                        simulate, solid_diffusion_step)
from batwb.gp import GPOptions, bag_fit, bag_predict, gp_fit, gp_predict, se_kernel
from batwb.hybrid import drive_cycle, synthetic_experiment, train_hybrid
from batwb.params import SpatialGrid, balance_positive_window, preset
from batwb.soh import noisy_degradation
from batwb.timeseries import TimeSeries


def test_01_conservation(acceptance, nmc, nmc_ocp):
    t0 = time.perf_counter()
    n = 361
    t = np.arange(n) * 10.0
    I = np.where(t < 1800.0, nmc.capacity, -nmc.capacity)
    res = simulate(nmc, SpatialGrid(), TimeSeries({"t": t, "I": I}), nmc_ocp,
                   SimOptions(soc0=0.6))
    li = res.electrolyte_li
    drift_e = float(np.max(np.abs(li / li[0] - 1.0)))

    geom = ParticleGeometry(nmc.R_n, 30)
    c = nmc.c_s_max_n * (0.3 + 0.4 * geom.r / nmc.R_n) ** 2
    m0 = geom.content(c)
    for _ in range(500):
        c = solid_diffusion_step(c, nmc.D_s_n_ref, 0.0, 5.0, geom, nmc.c_s_max_n)
    drift_s = abs(geom.content(c) / m0 - 1.0)
    dt = time.perf_counter() - t0
    ok = res.status == "completed" and drift_e < 1e-8 and drift_s < 1e-10 and dt < 10
    acceptance(1, "conservation", ok,
               f"electrolyte {drift_e:.2e} < 1e-8, solid {drift_s:.2e} < 1e-10, {dt:.2f} s < 10 s")


def test_02_grid_convergence(acceptance, nmc, nmc_ocp):
    t0 = time.perf_counter()
    prof = constant_current_profile(nmc.capacity, 600.0, 5.0)

    def voltage(n):
        return simulate(nmc, SpatialGrid.uniform(n), prof, nmc_ocp, SimOptions(soc0=0.9)).V

    ref = voltage(400)
    ns = np.array([6, 11, 21, 41, 81])
    errs = np.array([np.sqrt(np.mean((voltage(n) - ref) ** 2)) for n in ns])
    slope = float(np.polyfit(np.log(1.0 / (ns - 1)), np.log(errs), 1)[0])
    dt = time.perf_counter() - t0
    ok = abs(slope - 2.0) <= 0.3 and np.all(np.diff(errs) < 0) and dt < 120
    acceptance(2, "grid convergence", ok,
               f"slope {slope:.3f} vs formal order 2 +/- 0.3, {dt:.1f} s < 120 s")


def test_03_zero_aging_degeneracy(acceptance, nmc, nmc_ocp):
    prof = constant_current_profile(nmc.capacity / 3.0, 4 * 3600.0, 10.0)
    fresh = Simulator(nmc, nmc_ocp, SpatialGrid(), SimOptions(v_min=2.8)).run(prof)
    aged = Simulator(nmc, nmc_ocp, SpatialGrid(),
                     SimOptions(v_min=2.8, aging=AgingParameters.zero())).run(prof)
    same_len = len(fresh) == len(aged)
    diff = float(np.max(np.abs(fresh.V - aged.V))) if same_len else np.inf
    ok = same_len and fresh.status == "cutoff" and diff <= 1e-12
    acceptance(3, "zero-aging degeneracy", ok,
               f"max |dV| {diff:.1e} <= 1e-12 over {fresh.t[-1] / 3600:.2f} h C/3 discharge")


def test_04_lam_closed_form(acceptance, nmc, nmc_ocp):
    bp, bn = 2e-6, 5e-6
    ag = AgingParameters(beta_prime_p=bp, beta_prime_n=bn)
    prof = constant_current_profile(0.0, 100 * 3600.0, 60.0)
    res = Simulator(nmc, nmc_ocp, SpatialGrid(n_r=5, n_x_p=3, n_x_s=3, n_x_n=3),
                    SimOptions(soc0=0.5, aging=ag)).run(prof)
    err_p = float(np.max(np.abs(res.a_t_p / (nmc.a_p * np.exp(-bp * res.t)) - 1.0)))
    err_n = float(np.max(np.abs(res.a_t_n / (nmc.a_n * np.exp(-bn * res.t)) - 1.0)))
    ok = res.t[-1] == 100 * 3600.0 and max(err_p, err_n) <= 1e-6
    acceptance(4, "LAM closed form", ok,
               f"max rel err p {err_p:.1e}, n {err_n:.1e} <= 1e-6 over 100 h")


def test_05_capacity_fade_monotone(acceptance, nmc, nmc_ocp):
    ag = AgingParameters(k_f_ref=2e-12, i_0_lpl=1e-5, beta_lpl=0.5)
    sim = Simulator(nmc, nmc_ocp, SpatialGrid(n_r=10, n_x_p=4, n_x_s=3, n_x_n=4),
                    SimOptions(aging=ag))
    caps, state = cycle_aging(sim, 10, nmc.capacity / 2.0, nmc.capacity, 2.8, 4.2, dt=10.0)
    steps = np.diff(caps)
    ok = caps.size == 10 and np.all(steps <= 0.0) and state.aging.L_SEI > 0
    acceptance(5, "capacity-fade monotonicity", ok,
               f"capacities {caps[0]:.4f} -> {caps[-1]:.4f} Ah, largest step {steps.max():.2e}")


@pytest.mark.slow
def test_06_synthetic_truth_identification(acceptance, nmc_ocp):
    truth = balance_positive_window(preset("nmc_graphite"))
    grid = SpatialGrid(n_r=10, n_x_p=4, n_x_s=3, n_x_n=4)
    prof = idn.pulse_profile(truth.capacity, 2400.0, 20.0)
    ds = idn.synthetic_dataset(truth, nmc_ocp, prof, soc0=0.9, grid=grid)
    names = ["R_l", "D_s_p_ref", "D_s_n_ref", "theta_n_100"]
    spec = idn.ParameterSpec.around(names, truth.to_dict(), 0.3)
    J_truth = idn.FreshObjective(truth, spec, ds, nmc_ocp, grid)(
        np.array([getattr(truth, n) for n in names]))
    t0 = time.perf_counter()
    res = idn.identify_fresh(ds, truth, nmc_ocp, spec, 20000, seed=1, grid=grid)
    dt = time.perf_counter() - t0
    rel = {n: res.params[n] / getattr(truth, n) - 1.0 for n in names}
    worst = max(abs(v) for v in rel.values())
    ok = J_truth < 1e-9 and worst <= 0.05 and res.n_evals <= 20000 and dt < 1800
    acceptance(6, "synthetic-truth identification", ok,
               f"J(truth) {J_truth:.1e}, worst rel err {worst:.1e} <= 0.05, "
               f"{res.n_evals} evals, {dt:.0f} s < 1800 s")


def test_07_ocv_constraint_exactness(acceptance, nmc_ocp):
    w = idn.ocv_window({"theta_n_100": 0.85, "theta_p_100": 0.3, "Q_n": 12.5, "Q_p": 20.0},
                       10.0)
    worked = w["theta_n_0"] == 0.85 - 10.0 / 12.5 and abs(w["theta_n_0"] - 0.05) < 1e-15
    truth = {"theta_n_100": 0.85, "theta_p_100": 0.28, "Q_n": 5.6, "Q_p": 8.7}
    Q = 4.5
    ocv = idn.synthetic_ocv(truth, Q, nmc_ocp)
    spec = idn.ParameterSpec.preset("VARTHETA", preset("nmc_graphite"), 0.3,
                                    Q_n=5.6, Q_p=8.7)
    search = spec.without(["theta_p_100"])
    obj = idn.OCVObjective(search, ocv, nmc_ocp, Q, True, log_windows=True)
    idn.optimize(obj, search, 600, seed=3)
    worst = 0.0
    for wnd in obj.windows:
        worst = max(worst, abs(wnd["theta_n_0"] - (wnd["theta_n_100"] - Q / wnd["Q_n"])),
                    abs(wnd["theta_p_0"] - (wnd["theta_p_100"] + Q / wnd["Q_p"])))
    ok = worked and len(obj.windows) > 0 and worst <= 1e-12
    acceptance(7, "OCV constraint exactness", ok,
               f"0.85 - 10/12.5 = {w['theta_n_0']!r}; max residual {worst:.1e} over "
               f"{len(obj.windows)} feasible candidates, tol 1e-12")


def _dense_oracle(X, y, Xs, ell, sf2, sn2):
    def k(A, B):
        return np.array([[sf2 * np.exp(-0.5 * np.sum(((a - b) / ell) ** 2)) for b in B]
                         for a in A])

    K = k(X, X) + sn2 * np.eye(len(X))
    Ks = k(Xs, X)
    mean = Ks @ np.linalg.solve(K, y)
    var = sf2 - np.einsum("ij,ji->i", Ks, np.linalg.solve(K, Ks.T))
    return mean, var


def test_08_gp_oracle(acceptance):
    rng = np.random.default_rng(8)
    worst = 0.0
    for n in range(1, 6):
        d = 1 + n % 2
        X = rng.uniform(-2, 2, (max(n, 2), d))
        y = rng.standard_normal(max(n, 2))
        Xs = rng.uniform(-3, 3, (7, d))
        ell, sf2, sn2 = rng.uniform(0.5, 2.0, d), 1.3, 0.05
        m = gp_fit(X, y, GPOptions(optimize=False, normalize_y=False, length_scale=ell,
                                   signal_var=sf2, noise_var=sn2))
        mu, var = gp_predict(m, Xs)
        mo, vo = _dense_oracle(X, y, Xs, ell, sf2, sn2)
        worst = max(worst, float(np.max(np.abs(mu - mo))), float(np.max(np.abs(var - vo))))
    # interpolation: with tiny noise the mean reproduces the training targets
    X = np.linspace(0, 1, 5)[:, None]
    y = np.sin(3 * X[:, 0])
    m = gp_fit(X, y, GPOptions(optimize=False, length_scale=0.3, noise_var=1e-10,
                               normalize_y=False))
    mu_train, _ = gp_predict(m, X)
    interp_err = float(np.max(np.abs(mu_train - y)))
    interp = interp_err <= 1e-4
    # prior reversion: 10 length scales outside the hull the variance is the prior's
    _, v_far = gp_predict(m, np.array([[1.0 + 10 * 0.3]]))
    revert = abs(v_far[0] / m.signal_var - 1.0) < 0.01
    ok = worst <= 1e-8 and interp and revert
    acceptance(8, "GP oracle equivalence", ok,
               f"max |diff| vs dense solve {worst:.1e} <= 1e-8, interpolation err "
               f"{interp_err:.1e} <= 1e-4, far variance ratio {v_far[0] / m.signal_var:.4f}")


def test_09_bagging_variance_reduction(acceptance):
    cycles = np.arange(0.0, 1000.0, 5.0)
    y = noisy_degradation(cycles, np.random.default_rng(0), noise=1.0, q0=100.0, fade=1e-4,
                          knee_depth=0.02, knee_width=120.0)
    Xq = np.linspace(50.0, 950.0, 40)[:, None]
    single, bagged = [], []
    for s in range(50):
        idx = np.random.default_rng(1000 + s).choice(cycles.size, 20, replace=False)
        X = cycles[idx, None]
        one = bag_fit(X, y[idx], B=1, seed=s, bootstrap=False)
        ens = bag_fit(X, y[idx], B=10, seed=s)
        single.append(bag_predict(one, Xq)[0])
        bagged.append(bag_predict(ens, Xq)[0])
    v_single = float(np.var(single, axis=0).mean())
    v_bag = float(np.var(bagged, axis=0).mean())
    acceptance(9, "bagging variance reduction", v_bag <= v_single,
               f"split-to-split variance bagged {v_bag:.4f} <= single {v_single:.4f} "
               f"(50 splits, n_train 20, B 10)")


def test_10_hybrid_improvement(acceptance, lfp, lfp_ocp, small_grid):
    t0 = time.perf_counter()
    pairs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for seed, soc0 in ((1, 0.85), (2, 0.8), (3, 0.75)):
            prof = drive_cycle(lfp.capacity, 3 * 3600.0, 5.0, seed=seed)
            pairs.append(synthetic_experiment(lfp, lfp_ocp, prof, soc0, small_grid, seed=seed))
    model = train_hybrid([pairs[0]], [pairs[1]], seed=0)
    exp, sim = pairs[2]
    V = exp.V[:len(sim)]
    r_phys = float(np.sqrt(np.mean((V - sim.V) ** 2)))
    r_hyb = float(np.sqrt(np.mean((V - model.voltage(sim)) ** 2)))
    red = 1.0 - r_hyb / r_phys
    dt = time.perf_counter() - t0
    acceptance(10, "hybrid improvement", red >= 0.40 and dt < 300,
               f"held-out RMSE {1e3 * r_phys:.2f} -> {1e3 * r_hyb:.2f} mV, "
               f"reduction {100 * red:.1f}% >= 40%, {dt:.1f} s < 300 s")


def test_11_coreshell(acceptance, lfp, lfp_ocp, small_grid, quiet):
    csp = CoreShellParameters()
    st = initial_state(0.5, lfp.c_s_max_p, lfp.R_p, csp)
    st.shell = st.shell * (1.0 + 0.02 * np.sin(np.linspace(0.0, 3.0, st.shell.size)))
    N0 = st.total_lithium()
    s = st
    for _ in range(2000):
        s = coreshell_step(s, 0.0, lfp.D_s("p", 298.15), 0.5, csp)
    drift = abs(s.total_lithium() / N0 - 1.0)
    moved = abs(s.r_p - st.r_p) / lfp.R_p

    # discharge t/2, charge t, discharge t/2: zero net charge, same orientation at the end
    dt, T = 5.0, 1200.0
    t = np.arange(int(2 * T / dt) + 1) * dt
    I = lfp.capacity * np.where(t < T / 2, 1.0, np.where(t < 1.5 * T, -1.0, 1.0))
    I[-1] = 0.0
    worst = 0.0
    for soc0 in (0.3, 0.5, 0.7):
        res = Simulator(lfp, lfp_ocp, small_grid,
                        SimOptions(soc0=soc0, coreshell=csp)).run(TimeSeries({"t": t, "I": I}))
        worst = max(worst, abs(res.r_p_norm[-1] - res.r_p_norm[0]))
    ok = drift <= 1e-8 and moved > 0 and worst <= 0.02
    acceptance(11, "core-shell conservation and reversibility", ok,
               f"zero-flux drift {drift:.1e} <= 1e-8 (boundary moved {moved:.1e} R_p), "
               f"boundary return error {worst:.1e} R_p <= 0.02")


def test_12_end_to_end_determinism(acceptance, tmp_path):
    data = tmp_path / "drive.csv"
    prof = drive_cycle(5.0, 1800.0, 10.0, seed=4)
    prof.to_csv(data)
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("seed: 11\n"
                   "cell: {preset: nmc_graphite}\n"
                   "grid: {n_r: 8, n_x_p: 4, n_x_s: 3, n_x_n: 4}\n"
                   "simulate:\n"
                   "  profile: {type: drive, C_rate: 1.0, duration_s: 1800, dt_s: 10}\n"
                   "  soc0: 0.8\n"
                   "  internal_signals: true\n")
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert cli_main(["--config", str(cfg), "--out", str(out), "simulate"]) == 0
        outs.append(out)
    csvs = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*.csv"))
    same = all((outs[0] / p).read_bytes() == (outs[1] / p).read_bytes() for p in csvs)
    ok = len(csvs) >= 2 and same
    acceptance(12, "end-to-end determinism", ok,
               f"{len(csvs)} CSV outputs byte-identical across two runs: {same}")
