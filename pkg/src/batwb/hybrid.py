"""Hybrid physics + machine-learning voltage model for hysteretic cells.

The physics part is the ESPM with a core-shell positive particle, whose
positive potential is the average of the charge and discharge branches. A
tree ensemble learns the residual ``V_exp - V_cs`` from the applied current
and the simulated internal signals.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, MisalignmentError
from .espm import SimOptions, SimulationResult, Simulator
from .ocp import OCPSet, ResistanceTable
from .params import CellParameters, SpatialGrid
from .timeseries import TimeSeries
from .trees import ForestOptions, RandomForest, forest_fit, forest_predict

SCHEMA_VERSION = 1
FEATURE_NAMES = ("I", "SOC_n", "SOC_p", "r_p_norm", "theta_p_surf", "theta_n_surf",
                 "V_cs", "eta_p", "eta_n", "delta_phi_e")


def hysteresis_features(sim: SimulationResult) -> np.ndarray:
    """Feature matrix with columns :data:`FEATURE_NAMES`."""
    return sim.hysteresis_features()


def build_residual_dataset(exp: TimeSeries, sim: SimulationResult):
    """Aligned features and residual targets ``V_exp - V_cs``.

    Samples are paired by index; each pair must agree in time to within one
    sample period. A truncated simulation pairs with the leading part of the
    record. Samples where the simulation flagged OCP extrapolation are
    dropped. Returns ``(X, y, keep)`` where ``keep`` indexes the simulation.
    """
    n = len(sim)
    if n == 0 or len(exp) < n:
        raise MisalignmentError("experimental record shorter than the simulation")
    t_e = np.asarray(exp["t"], float)[:n]
    t_s = np.asarray(sim["t"], float)
    period = float(np.median(np.diff(t_e))) if n > 1 else 0.0
    if np.any(np.abs(t_e - t_s) > period + 1e-9):
        raise MisalignmentError("experimental and simulated time stamps disagree")
    X = hysteresis_features(sim)
    y = np.asarray(exp["V"], float)[:n] - np.asarray(sim["V"], float)
    keep = ~np.asarray(sim["extrapolated"], bool)
    keep &= np.all(np.isfinite(X), axis=1) & np.isfinite(y)
    idx = np.flatnonzero(keep)
    return X[idx], y[idx], idx


def hybrid_voltage(V_cs, V_h=None):
    """``V_cs + V_h``; without a hysteresis term the physics voltage is returned."""
    V_cs = np.asarray(V_cs, float)
    if V_h is None:
        return V_cs.copy() if V_cs.ndim else float(V_cs)
    out = V_cs + np.asarray(V_h, float)
    return out if out.ndim else float(out)


@dataclass
class HybridModel:
    forest: RandomForest | None
    options: ForestOptions | None = None
    validation: dict = field(default_factory=dict)

    def predict_residual(self, sim: SimulationResult) -> np.ndarray:
        if self.forest is None:
            return np.zeros(len(sim))
        return forest_predict(self.forest, hysteresis_features(sim))

    def voltage(self, sim: SimulationResult) -> np.ndarray:
        if self.forest is None:
            return hybrid_voltage(sim["V"])
        return hybrid_voltage(sim["V"], self.predict_residual(sim))

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "kind": "hybrid_hysteresis",
                "features": list(FEATURE_NAMES),
                "forest": None if self.forest is None else self.forest.to_dict(),
                "validation": self.validation}

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            d = json.load(fh)
        if d.get("kind") != "hybrid_hysteresis" or d.get("schema_version") != SCHEMA_VERSION:
            raise DataError(f"{path}: not a supported hybrid model artifact")
        if list(d.get("features", [])) != list(FEATURE_NAMES):
            raise DataError(f"{path}: feature schema mismatch")
        forest = None if d["forest"] is None else RandomForest.from_dict(d["forest"])
        return cls(forest, forest.options if forest else None, d.get("validation", {}))


DEFAULT_GRID = {"T": (30,), "max_depth": (6, 10, 14), "min_leaf": (3, 10),
                "feature_rate": (0.5, 1.0)}


def _rmse(a, b):
    d = np.asarray(a) - np.asarray(b)
    return float(np.sqrt(np.mean(d * d)))


def grid_search(X_tr, y_tr, X_va, y_va, grid: dict | None = None, seed: int = 0):
    """Pick forest hyperparameters by validation RMSE; ties keep the first."""
    grid = grid or DEFAULT_GRID
    keys = ("T", "max_depth", "min_leaf", "feature_rate")
    results = []
    best = None
    for combo in itertools.product(*(grid[k] for k in keys)):
        opts = ForestOptions(**dict(zip(keys, combo)), seed=seed)
        f = forest_fit(X_tr, y_tr, opts, FEATURE_NAMES)
        r = _rmse(forest_predict(f, X_va), y_va)
        results.append({**dict(zip(keys, combo)), "rmse": r})
        if best is None or r < best[0]:
            best = (r, opts)
    return best[1], results


def train_hybrid(train: list, validation: list | None = None, grid: dict | None = None,
                 seed: int = 0, val_fraction: float = 0.25) -> HybridModel:
    """Fit the residual forest.

    ``train`` and ``validation`` are lists of ``(exp, sim)`` pairs. Without a
    validation list, the trailing ``val_fraction`` of each training profile
    is held out for the grid search. The chosen setting is refit on all
    training samples.
    """
    parts = [build_residual_dataset(e, s)[:2] for e, s in train]
    X = np.vstack([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    if validation:
        vparts = [build_residual_dataset(e, s)[:2] for e, s in validation]
        X_tr, y_tr = X, y
        X_va = np.vstack([p[0] for p in vparts])
        y_va = np.concatenate([p[1] for p in vparts])
    else:
        tr, va = [], []
        for Xi, yi in parts:
            cut = int(round(len(yi) * (1.0 - val_fraction)))
            tr.append((Xi[:cut], yi[:cut]))
            va.append((Xi[cut:], yi[cut:]))
        X_tr = np.vstack([a for a, _ in tr])
        y_tr = np.concatenate([b for _, b in tr])
        X_va = np.vstack([a for a, _ in va])
        y_va = np.concatenate([b for _, b in va])
    opts, results = grid_search(X_tr, y_tr, X_va, y_va, grid, seed)
    forest = forest_fit(X, y, opts, FEATURE_NAMES)
    return HybridModel(forest, opts, {"grid": results, "chosen": opts.__dict__})


# --------------------------------------------------------------------------
# synthetic data

def drive_cycle(capacity_Ah: float, duration: float, dt: float = 5.0, seed: int = 0,
                mean_C: float = 0.15, spread_C: float = 0.6, max_C: float = 1.5) -> TimeSeries:
    """Pulse-train drive cycle: random piecewise-constant current with rests and noise."""
    rng = np.random.default_rng(seed)
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    I = np.empty(n)
    k = 0
    while k < n:
        hold = int(rng.integers(2, 25))
        if rng.random() < 0.2:
            level = 0.0
        else:
            level = float(np.clip(rng.normal(mean_C, spread_C), -max_C, max_C))
        I[k:k + hold] = level * capacity_Ah
        k += hold
    I += np.where(I != 0.0, rng.normal(0.0, 0.01 * capacity_Ah, n), 0.0)
    return TimeSeries({"t": t, "I": I})


def branch_hysteresis(sim: SimulationResult, ocp: OCPSet) -> np.ndarray:
    """Branch offset ``U_branch(theta_p) - U_avg(theta_p)`` selected by the last nonzero current.

    Discharge (``I > 0``) follows the discharge branch, charge the charge
    branch; rests keep the previous branch. Before any current the discharge
    branch is assumed.
    """
    if not ocp.has_branches:
        raise DataError("branch hysteresis needs charge and discharge positive OCPs")
    I = np.asarray(sim["I"], float)
    th = np.asarray(sim["theta_p"], float)
    last = np.empty(I.size)
    s = 1.0
    for k, cur in enumerate(I):
        if cur > 0:
            s = 1.0
        elif cur < 0:
            s = -1.0
        last[k] = s
    ch = ocp.positive_charge(th)
    dis = ocp.positive_discharge(th)
    avg = 0.5 * (ch + dis)
    return np.where(last > 0, dis, ch) - avg


def synthetic_experiment(cell: CellParameters, ocp: OCPSet, profile: TimeSeries,
                         soc0: float = 0.8, grid: SpatialGrid | None = None, options=None,
                         noise_V: float = 1e-3, seed: int = 0):
    """Core-shell simulation plus an "experimental" record with branch hysteresis.

    Returns ``(exp, sim)``.
    """
    from .coreshell import CoreShellParameters

    opts = options or SimOptions(coreshell=CoreShellParameters())
    opts = SimOptions(**{**opts.__dict__, "soc0": soc0})
    sim = Simulator(cell, ocp, grid or SpatialGrid(), opts).run(profile)
    rng = np.random.default_rng(seed)
    V = sim["V"] + branch_hysteresis(sim, ocp) + rng.normal(0.0, noise_V, len(sim))
    n = len(sim)
    exp = TimeSeries({"t": np.asarray(profile.t)[:n], "I": np.asarray(profile.I)[:n], "V": V})
    return exp, sim


def simulate_physics(cell: CellParameters, ocp: OCPSet, profile: TimeSeries, soc0: float,
                     grid=None, R_l_table: ResistanceTable | None = None) -> SimulationResult:
    """Core-shell physics voltage ``V_cs`` over ``profile``."""
    from .coreshell import CoreShellParameters

    opts = SimOptions(soc0=soc0, coreshell=CoreShellParameters(), R_l_table=R_l_table)
    return Simulator(cell, ocp, grid or SpatialGrid(), opts).run(profile)
