"""Parameter identification by simulation-in-the-loop differential evolution.

Stage 1 fits fresh-cell parameters to voltage and SOC traces; stage 2
freezes them and refits the aging-sensitive subset per aged dataset. The
pseudo-OCV problem fits electrode windows and capacities with its equality
constraints substituted exactly.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainError, InfeasibleWindowError, SolverError
from .espm import SimOptions, Simulator
from .ocp import OCPSet
from .params import CellParameters, SpatialGrid
from .timeseries import TimeSeries

log = logging.getLogger(__name__)

PENALTY = 1e6


# --------------------------------------------------------------------------
# search space

@dataclass(frozen=True)
class ParamBound:
    name: str
    lower: float
    upper: float
    scale: str = "linear"

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise DomainError(f"{self.name}: bounds must be finite")
        if not self.lower < self.upper:
            raise DomainError(f"{self.name}: need lower < upper")
        if self.scale not in ("linear", "log"):
            raise DomainError(f"{self.name}: scale must be 'linear' or 'log'")
        if self.scale == "log" and self.lower <= 0:
            raise DomainError(f"{self.name}: log scale needs positive bounds")


THETA1_NAMES = ("A_cell", "R_l", "nu_n", "R_p", "R_n", "D_s_p_ref", "D_s_n_ref",
                "theta_p_100", "theta_n_100")
THETA2_NAMES = ("sei_lumped", "theta_p_0", "theta_n_100")
VARTHETA_NAMES = ("theta_p_100", "theta_n_100", "Q_n", "Q_p")

_LOG_NAMES = {"R_p", "R_n", "D_s_p_ref", "D_s_n_ref", "k_p", "k_n", "D_e", "kappa_e"}
_UNIT = {"theta_p_0", "theta_p_100", "theta_n_0", "theta_n_100", "nu_p", "nu_n",
         "eps_p", "eps_s", "eps_n"}
_LUMPED = {"Q_n", "Q_p"}


class ParameterSpec:
    """Ordered search space of named bounded parameters."""

    def __init__(self, bounds):
        self.bounds = tuple(b if isinstance(b, ParamBound) else ParamBound(*b) for b in bounds)
        names = self.names
        if len(set(names)) != len(names):
            raise DomainError("duplicate parameter names")
        valid = set(CellParameters.__dataclass_fields__) | _LUMPED
        bad = [n for n in names if n not in valid]
        if bad:
            raise DomainError(f"unknown parameter name(s): {bad}")
        self.lower = np.array([b.lower for b in self.bounds])
        self.upper = np.array([b.upper for b in self.bounds])
        self._log = np.array([b.scale == "log" for b in self.bounds])

    @property
    def names(self):
        return [b.name for b in self.bounds]

    @property
    def dim(self):
        return len(self.bounds)

    def decode(self, u) -> np.ndarray:
        """Unit cube to physical values (clipped to the bounds)."""
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        lin = self.lower + u * (self.upper - self.lower)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = self.lower * (self.upper / self.lower) ** u
        return np.clip(np.where(self._log, lg, lin), self.lower, self.upper)

    def encode(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), self.lower, self.upper)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.log(x / self.lower) / np.log(self.upper / self.lower)
        lin = (x - self.lower) / (self.upper - self.lower)
        return np.clip(np.where(self._log, lg, lin), 0.0, 1.0)

    def as_dict(self, x) -> dict:
        return {n: float(v) for n, v in zip(self.names, x)}

    def subset(self, names) -> "ParameterSpec":
        keep = [b for b in self.bounds if b.name in set(names)]
        return ParameterSpec(keep)

    def without(self, names) -> "ParameterSpec":
        drop = set(names)
        return ParameterSpec([b for b in self.bounds if b.name not in drop])

    def to_list(self):
        return [[b.name, b.lower, b.upper, b.scale] for b in self.bounds]

    @classmethod
    def around(cls, names, center: dict, rel: float = 0.3, scales: dict | None = None):
        """Bounds ``center * (1 -/+ rel)``; stoichiometries and fractions are kept in [0, 1]."""
        scales = scales or {}
        out = []
        for n in names:
            c = float(center[n])
            lo, hi = c * (1 - rel), c * (1 + rel)
            if c == 0.0:
                lo, hi = 0.0, rel
            if n in _UNIT:
                lo, hi = max(lo, 0.0), min(hi, 1.0)
            out.append(ParamBound(n, lo, hi, scales.get(n, "log" if n in _LOG_NAMES else "linear")))
        return cls(out)

    @classmethod
    def preset(cls, name: str, base: CellParameters, rel: float = 0.3,
               Q_n: float | None = None, Q_p: float | None = None) -> "ParameterSpec":
        """Named presets ``THETA1``, ``THETA2``, ``VARTHETA`` centered on ``base``."""
        center = base.to_dict()
        center["Q_n"] = Q_n if Q_n is not None else base.electrode_capacity("n")
        center["Q_p"] = Q_p if Q_p is not None else base.electrode_capacity("p")
        names = {"THETA1": THETA1_NAMES, "THETA2": THETA2_NAMES,
                 "VARTHETA": VARTHETA_NAMES}.get(name.upper())
        if names is None:
            raise DomainError(f"unknown preset {name!r}")
        spec = cls.around(names, center, rel)
        if "sei_lumped" in names and center["sei_lumped"] == 0.0:
            # no film in the base cell: search from zero up to a generous ceiling
            b = [ParamBound("sei_lumped", 0.0, 1e-2, "linear") if x.name == "sei_lumped" else x
                 for x in spec.bounds]
            spec = cls(b)
        return spec


def apply_parameters(base: CellParameters, values: dict) -> CellParameters:
    """Candidate cell: ``base`` with CellParameters fields from ``values`` replaced."""
    fields_ = {k: v for k, v in values.items() if k not in _LUMPED}
    return base.replace(**fields_) if fields_ else base


# --------------------------------------------------------------------------
# data

@dataclass
class IdentificationDataset:
    t: np.ndarray
    I: np.ndarray
    V: np.ndarray
    SOC_CC: np.ndarray
    soc0: float = 1.0
    T: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.I = np.asarray(self.I, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        self.SOC_CC = np.asarray(self.SOC_CC, dtype=float)
        n = self.t.size
        if n < 2 or any(a.size != n for a in (self.I, self.V, self.SOC_CC)):
            raise DataError("dataset columns must share a length >= 2")
        if np.any(np.diff(self.t) <= 0):
            raise DataError("dataset time must be strictly increasing")
        if self.SOC_CC.min() < -0.05 or self.SOC_CC.max() > 1.05:
            raise DataError("SOC_CC outside [-0.05, 1.05]")

    def profile(self) -> TimeSeries:
        cols = {"t": self.t, "I": self.I}
        if self.T is not None:
            cols["T"] = self.T
        return TimeSeries(cols)

    @classmethod
    def from_timeseries(cls, ts: TimeSeries, capacity_Ah: float, soc0: float = 1.0, name=""):
        """Build from columns ``t, I, V`` (and ``SOC_CC`` if present)."""
        soc_cc = ts["SOC_CC"] if "SOC_CC" in ts else coulomb_count(ts["t"], ts["I"],
                                                                     capacity_Ah, soc0)
        T = ts["T"] if "T" in ts else None
        return cls(ts["t"], ts["I"], ts["V"], soc_cc, soc0, T, name)


def coulomb_count(t, I, capacity_Ah: float, soc0: float) -> np.ndarray:
    """SOC by Coulomb counting with the current held over each interval."""
    t = np.asarray(t, dtype=float)
    I = np.asarray(I, dtype=float)
    q = np.concatenate(([0.0], np.cumsum(I[:-1] * np.diff(t))))
    return soc0 - q / (3600.0 * capacity_Ah)


@dataclass
class OCVDataset:
    """Pseudo-OCV curve over discharged capacity, starting from full charge."""

    capacity_Ah: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        self.capacity_Ah = np.asarray(self.capacity_Ah, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if self.capacity_Ah.shape != self.V.shape or self.V.size < 2:
            raise DataError("OCV dataset needs equal-length columns with >= 2 points")
        if np.any(np.diff(self.capacity_Ah) <= 0):
            raise DataError("discharged capacity must be strictly increasing")

    @property
    def Q(self) -> float:
        return float(self.capacity_Ah[-1] - self.capacity_Ah[0])


# --------------------------------------------------------------------------
# objectives

def _rmse(a, b) -> float:
    d = np.asarray(a) - np.asarray(b)
    return float(np.sqrt(np.mean(d * d)))


@dataclass
class FreshObjective:
    """Voltage and SOC misfit of a simulated candidate (picklable callable)."""

    base: CellParameters
    spec: ParameterSpec
    dataset: IdentificationDataset
    ocp: OCPSet
    grid: SpatialGrid = field(default_factory=SpatialGrid)
    weights: tuple = (1.0, 1.0, 1.0)
    options: SimOptions | None = None

    def __call__(self, x) -> float:
        return cost_fresh(self.spec.as_dict(x), self.dataset, self.weights, self.base,
                          self.ocp, self.grid, self.options)


def cost_fresh(theta: dict, dataset: IdentificationDataset, weights=(1.0, 1.0, 1.0),
               base: CellParameters | None = None, ocp: OCPSet | None = None,
               grid: SpatialGrid | None = None, options: SimOptions | None = None) -> float:
    """Weighted voltage and electrode-SOC RMSE of a candidate.

    Failed or truncated simulations return ``PENALTY`` plus the unsimulated
    fraction of the horizon; exceptions are not propagated.
    """
    if base is None or ocp is None:
        raise DomainError("cost_fresh needs a base parameter set and OCP tables")
    w1, w2, w3 = weights
    try:
        cell = apply_parameters(base, theta)
    except DomainError:
        return PENALTY + 1.0
    opts = SimOptions(soc0=dataset.soc0, raise_on_error=False) if options is None else \
        _with(options, soc0=dataset.soc0, raise_on_error=False)
    try:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = Simulator(cell, ocp, grid, opts).run(dataset.profile())
    except (SolverError, DomainError) as exc:
        log.debug("candidate failed: %s", exc)
        return PENALTY + 1.0
    n = len(res)
    if n < dataset.t.size:
        return PENALTY + 1.0 - n / dataset.t.size
    J = 0.0
    if w1:
        J += w1 * _rmse(dataset.V, res.V)
    if w2:
        J += w2 * _rmse(dataset.SOC_CC, res.SOC_n)
    if w3:
        J += w3 * _rmse(dataset.SOC_CC, res.SOC_p)
    return J if math.isfinite(J) else PENALTY + 1.0


def _with(options: SimOptions, **changes) -> SimOptions:
    import dataclasses

    return dataclasses.replace(options, **changes)


def ocv_window(vartheta: dict, Q: float) -> dict:
    """Stoichiometry window implied by ``vartheta`` and discharged capacity ``Q``.

    ``theta_n_0 = theta_n_100 - Q/Q_n`` and ``theta_p_0 = theta_p_100 + Q/Q_p``.
    """
    Q_n, Q_p = vartheta["Q_n"], vartheta["Q_p"]
    if Q_n <= 0 or Q_p <= 0:
        raise DomainError("electrode capacities must be > 0")
    th_n100, th_p100 = vartheta["theta_n_100"], vartheta["theta_p_100"]
    th_n0 = th_n100 - Q / Q_n
    th_p0 = th_p100 + Q / Q_p
    for name, v in (("theta_n_0", th_n0), ("theta_p_0", th_p0),
                    ("theta_n_100", th_n100), ("theta_p_100", th_p100)):
        if not 0.0 <= v <= 1.0:
            raise InfeasibleWindowError(f"{name} = {v:.6g} outside [0, 1]")
    return {"theta_n_100": th_n100, "theta_n_0": th_n0,
            "theta_p_100": th_p100, "theta_p_0": th_p0, "Q_n": Q_n, "Q_p": Q_p}


def anchor_theta_p_100(V_start: float, theta_n_100: float, ocp: OCPSet) -> float:
    """Positive stoichiometry at full charge that reproduces the measured start voltage."""
    target = V_start + ocp.U_n(theta_n_100)
    try:
        return ocp.positive_average_table().inverse(target)
    except DomainError as exc:
        raise InfeasibleWindowError(f"start voltage cannot be matched: {exc}") from None


def simulated_ocv(vartheta: dict, capacity_Ah, ocp: OCPSet) -> np.ndarray:
    q = np.asarray(capacity_Ah, dtype=float)
    th_n = vartheta["theta_n_100"] - q / vartheta["Q_n"]
    th_p = vartheta["theta_p_100"] + q / vartheta["Q_p"]
    return ocp.positive_average_table()(th_p) - ocp.negative(th_n)


def cost_ocv(vartheta: dict, ocv: OCVDataset, Q: float | None, ocp: OCPSet,
             anchor: bool = True, return_details: bool = False):
    """RMSE between simulated and measured pseudo-OCV.

    With ``anchor`` the supplied ``theta_p_100`` is replaced by the value
    that makes the first simulated point equal the first measured point.
    Raises :class:`InfeasibleWindowError` when the implied window leaves [0, 1].
    """
    Q = ocv.Q if Q is None else Q
    vt = dict(vartheta)
    if anchor:
        vt["theta_p_100"] = anchor_theta_p_100(float(ocv.V[0]), vt["theta_n_100"], ocp)
    win = ocv_window(vt, Q)
    q = ocv.capacity_Ah - ocv.capacity_Ah[0]
    V_sim = simulated_ocv(vt, q, ocp)
    J = _rmse(V_sim, ocv.V)
    if return_details:
        return J, {**win, "V_sim": V_sim}
    return J


@dataclass
class OCVObjective:
    spec: ParameterSpec
    ocv: OCVDataset
    ocp: OCPSet
    Q: float | None = None
    anchor: bool = True
    fixed: dict = field(default_factory=dict)
    log_windows: bool = False
    windows: list = field(default_factory=list)

    def __call__(self, x) -> float:
        vt = {**self.fixed, **self.spec.as_dict(x)}
        vt.setdefault("theta_p_100", 0.0)
        try:
            J, det = cost_ocv(vt, self.ocv, self.Q, self.ocp, self.anchor, return_details=True)
        except (InfeasibleWindowError, DomainError) as exc:
            return PENALTY + _infeasibility(str(exc))
        if self.log_windows:
            self.windows.append({k: det[k] for k in ("theta_n_100", "theta_n_0", "theta_p_100",
                                                     "theta_p_0", "Q_n", "Q_p")})
        return J


def _infeasibility(msg):
    # distance term parsed from the error message value when available
    try:
        v = float(msg.split("=")[1].split()[0])
        return min(abs(v - min(max(v, 0.0), 1.0)), 1.0)
    except (IndexError, ValueError):
        return 1.0


# --------------------------------------------------------------------------
# differential evolution

@dataclass
class OptimizeResult:
    x: np.ndarray
    cost: float
    params: dict
    history: list
    n_evals: int
    candidates: np.ndarray | None = None
    costs: np.ndarray | None = None

    def to_dict(self):
        return {"params": self.params, "cost": self.cost, "n_evals": self.n_evals,
                "history": self.history}


def _evaluate(cost, X, pool):
    if pool is None:
        return np.array([cost(x) for x in X], dtype=float)
    return np.array(list(pool.map(cost, list(X), chunksize=max(1, len(X) // 8))), dtype=float)


def optimize(cost, spec: ParameterSpec, budget: int, seed: int = 0, x0=None,
             pop_size: int | None = None, F_w: float = 0.7, CR: float = 0.9,
             workers: int = 1, record: bool = False, tol: float = 0.0,
             polish: float = 0.1) -> OptimizeResult:
    """Differential evolution (rand/1/bin) on the unit-scaled search space.

    Every evaluated candidate lies inside the bounds (mutants are clipped
    to the unit cube). Trials of one generation are evaluated together,
    optionally in ``workers`` processes; selection happens between
    generations, so results do not depend on ``workers``.
    ``tol`` stops early once the best cost is at or below it.

    A fraction ``polish`` of the budget is reserved for a bounded L-BFGS-B
    refinement of the best member (finite-difference gradients). DE alone
    closes in on a basin quickly but sharpens the last digits slowly.
    """
    dim = spec.dim
    NP = pop_size or 15 * dim
    if NP < 4:
        raise DomainError("population must be >= 4")
    if budget < NP:
        raise DomainError(f"budget {budget} smaller than population {NP}")
    if not 0.0 <= polish < 1.0:
        raise DomainError("polish must lie in [0, 1)")
    de_budget = max(NP, int(round(budget * (1.0 - polish))))
    rng = np.random.default_rng(seed)
    U = rng.random((NP, dim))
    if x0 is not None:
        U[0] = spec.encode(x0)
    pool = ProcessPoolExecutor(workers) if workers and workers > 1 else None
    cand, cvals = [], []
    try:
        X = spec.decode(U)
        fit = _evaluate(cost, X, pool)
        n_evals = NP
        if record:
            cand.append(X.copy())
            cvals.append(fit.copy())
        best = int(np.argmin(fit))
        history = [{"generation": 0, "n_evals": n_evals, "best_cost": float(fit[best])}]
        gen = 0
        while n_evals < de_budget and fit[best] > tol:
            gen += 1
            m = min(NP, de_budget - n_evals)
            idx = np.arange(m) if m == NP else np.sort(rng.choice(NP, m, replace=False))
            trials = np.empty((m, dim))
            for k, i in enumerate(idx):
                r = rng.choice(NP - 1, 3, replace=False)
                r[r >= i] += 1
                mutant = U[r[0]] + F_w * (U[r[1]] - U[r[2]])
                cross = rng.random(dim) < CR
                cross[rng.integers(dim)] = True
                trials[k] = np.clip(np.where(cross, mutant, U[i]), 0.0, 1.0)
            Xt = spec.decode(trials)
            ft = _evaluate(cost, Xt, pool)
            n_evals += m
            if record:
                cand.append(Xt.copy())
                cvals.append(ft.copy())
            better = ft <= fit[idx]
            U[idx[better]] = trials[better]
            fit[idx[better]] = ft[better]
            best = int(np.argmin(fit))
            history.append({"generation": gen, "n_evals": n_evals, "best_cost": float(fit[best])})
    finally:
        if pool is not None:
            pool.shutdown()
    ub, fb = U[best].copy(), float(fit[best])
    if budget - n_evals > 2 * dim + 1 and fb > tol:
        ub, fb, used = _polish(cost, spec, ub, fb, budget - n_evals, record, cand, cvals)
        n_evals += used
        history.append({"generation": gen + 1, "n_evals": n_evals, "best_cost": fb,
                        "stage": "polish"})
    xb = spec.decode(ub)
    return OptimizeResult(xb, fb, spec.as_dict(xb), history, n_evals,
                          np.vstack(cand) if record else None,
                          np.concatenate(cvals) if record else None)


class _BudgetSpent(Exception):
    pass


def _polish(cost, spec, u0, f0, max_evals, record, cand, cvals):
    from scipy.optimize import minimize

    state = {"n": 0, "u": u0.copy(), "f": f0}

    def fun(u):
        if state["n"] >= max_evals:
            raise _BudgetSpent
        u = np.clip(u, 0.0, 1.0)
        x = spec.decode(u)
        f = float(cost(x))
        state["n"] += 1
        if record:
            cand.append(x[None, :])
            cvals.append(np.array([f]))
        if f < state["f"]:
            state["u"], state["f"] = u.copy(), f
        return f

    try:
        minimize(fun, u0, method="L-BFGS-B", bounds=[(0.0, 1.0)] * spec.dim,
                 options={"maxfun": max_evals, "eps": 1e-7, "ftol": 0.0, "gtol": 1e-14})
    except _BudgetSpent:
        pass
    return state["u"], state["f"], state["n"]


# --------------------------------------------------------------------------
# drivers

def identify_fresh(dataset: IdentificationDataset, base: CellParameters, ocp: OCPSet,
                   spec: ParameterSpec, budget: int, seed: int = 0, grid=None, weights=(1, 1, 1),
                   x0=None, workers: int = 1, tol: float = 0.0) -> OptimizeResult:
    obj = FreshObjective(base, spec, dataset, ocp, grid or SpatialGrid(), tuple(weights))
    return optimize(obj, spec, budget, seed, x0=x0, workers=workers, tol=tol)


def identify_two_stage(fresh: IdentificationDataset, aged: list, base: CellParameters,
                       ocp: OCPSet, spec1: ParameterSpec, spec2: ParameterSpec,
                       budget1: int, budget2: int, seed: int = 0, grid=None,
                       weights=(1, 1, 1), x0=None, workers: int = 1) -> dict:
    """Stage 1 on fresh data, then stage 2 per aged dataset with stage 1 frozen."""
    seeds = np.random.SeedSequence(seed).spawn(1 + len(aged))
    s1 = identify_fresh(fresh, base, ocp, spec1, budget1, _seed_int(seeds[0]), grid, weights,
                        x0, workers)
    cell1 = apply_parameters(base, s1.params)
    out = {"stage1": s1, "stage2": [], "cell": cell1}
    for k, ds in enumerate(aged):
        r = identify_fresh(ds, cell1, ocp, spec2, budget2, _seed_int(seeds[k + 1]), grid,
                           weights, None, workers)
        out["stage2"].append(r)
    drift = {}
    for name in ("theta_n_100", "sei_lumped"):
        series = [s1.params.get(name, getattr(cell1, name))]
        series += [r.params.get(name, getattr(cell1, name)) for r in out["stage2"]]
        drift[name] = series
    out["drift"] = drift
    return out


def identify_ocv(ocv: OCVDataset, ocp: OCPSet, spec: ParameterSpec, budget: int, seed: int = 0,
                 Q: float | None = None, anchor: bool = True, record: bool = False):
    """Fit the OCV window parameters; ``theta_p_100`` is derived when anchored."""
    search = spec.without(["theta_p_100"]) if anchor else spec
    obj = OCVObjective(search, ocv, ocp, Q, anchor, log_windows=record)
    res = optimize(obj, search, budget, seed, record=record)
    vt = dict(res.params)
    vt.setdefault("theta_p_100", 0.0)
    _, det = cost_ocv(vt, ocv, Q, ocp, anchor, return_details=True)
    res.params = {k: det[k] for k in ("theta_p_100", "theta_n_100", "theta_p_0", "theta_n_0",
                                      "Q_n", "Q_p")}
    return res, obj.windows


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# --------------------------------------------------------------------------
# synthetic data

def pulse_profile(capacity_Ah: float, duration: float = 2400.0, dt: float = 20.0) -> TimeSeries:
    """Discharge-dominated pulse train with rests and charge pulses."""
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    C = capacity_Ah
    pattern = [(300.0, 1.0 * C), (240.0, 0.0), (200.0, 0.5 * C), (200.0, 0.0),
               (200.0, -0.75 * C), (260.0, 0.0)]
    period = sum(d for d, _ in pattern)
    I = np.zeros(n)
    for k, tk in enumerate(t):
        s = tk % period
        acc = 0.0
        for d, cur in pattern:
            if s < acc + d:
                I[k] = cur
                break
            acc += d
    return TimeSeries({"t": t, "I": I})


def synthetic_dataset(cell: CellParameters, ocp: OCPSet, profile: TimeSeries, soc0: float = 0.9,
                      grid=None, noise_std: float = 0.0, seed: int = 0,
                      name: str = "synthetic") -> IdentificationDataset:
    """Noiseless (or noisy) model-generated identification data."""
    res = Simulator(cell, ocp, grid or SpatialGrid(), SimOptions(soc0=soc0)).run(profile)
    V = res.V.copy()
    if noise_std > 0:
        V = V + np.random.default_rng(seed).normal(0.0, noise_std, V.size)
    soc_cc = coulomb_count(profile.t, profile.I, cell.capacity, soc0)
    return IdentificationDataset(profile.t, profile.I, V, soc_cc, soc0, None, name)


def synthetic_ocv(vartheta: dict, Q: float, ocp: OCPSet, n: int = 101) -> OCVDataset:
    q = np.linspace(0.0, Q, n)
    return OCVDataset(q, simulated_ocv(vartheta, q, ocp))
