"""Enhanced single-particle model: discretization, kinetics and time loop.

Spatial discretization is finite-volume throughout: vertex-centered
spherical shells for each particle (with the r^2 metric), and
vertex-centered cells in x for the electrolyte with nodes shared at the two
region interfaces. Diffusion is implicit (backward Euler); kinetic and
source terms are evaluated explicitly at the start of each step.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import coreshell as cs
from . import degradation as deg
from . import kernels
from .constants import F, R_GAS, T_REF
from .errors import (
    DomainError,
    ExtrapolationWarning,
    InstabilityError,
    NegativeConcentrationError,
    SaturationError,
    SimulationError,
    SolverError,
)
from .ocp import OCPSet, ResistanceTable
from .params import CellParameters, SpatialGrid, effective_transport
from .timeseries import TimeSeries

_SAT_TOL = 1e-9


# --------------------------------------------------------------------------
# geometry

class ParticleGeometry:
    """Vertex-centered finite-volume sphere; volumes are per steradian (r^3/3)."""

    def __init__(self, R: float, n: int):
        if n < 3:
            raise DomainError("need at least 3 radial nodes")
        self.R = R
        self.n = n
        self.r = np.linspace(0.0, R, n)
        self.dr = R / (n - 1)
        faces = 0.5 * (self.r[:-1] + self.r[1:])
        edges = np.concatenate(([0.0], faces, [R]))
        self.vol = (edges[1:] ** 3 - edges[:-1] ** 3) / 3.0
        self.face_area_over_dr = faces ** 2 / self.dr
        self.total_vol = R ** 3 / 3.0

    def mean(self, c) -> float:
        return float(np.dot(self.vol, c)) / self.total_vol

    def content(self, c) -> float:
        return float(np.dot(self.vol, c))


class ElectrolyteGeometry:
    """Node layout across positive electrode, separator and negative electrode."""

    def __init__(self, params: CellParameters, grid: SpatialGrid):
        xp = np.linspace(0.0, params.L_p, grid.n_x_p)
        xs = np.linspace(params.L_p, params.L_p + params.L_s, grid.n_x_s)
        xn = np.linspace(params.L_p + params.L_s, params.L_total, grid.n_x_n)
        self.x = np.concatenate((xp, xs[1:], xn[1:]))
        n = self.x.size
        h = np.diff(self.x)
        region = np.concatenate((np.zeros(grid.n_x_p - 1, int),
                                 np.ones(grid.n_x_s - 1, int),
                                 np.full(grid.n_x_n - 1, 2)))
        self.h = h
        self.face_region = region
        # half-cell lengths attached to each node, per region
        half = np.zeros((3, n))
        for k in range(n - 1):
            half[region[k], k] += 0.5 * h[k]
            half[region[k], k + 1] += 0.5 * h[k]
        self.half = half
        self.L = np.array([params.L_p, params.L_s, params.L_n])
        self.n = n

    def capacity(self, eps3) -> np.ndarray:
        return eps3[0] * self.half[0] + eps3[1] * self.half[1] + eps3[2] * self.half[2]

    def region_means(self, c) -> np.ndarray:
        return (self.half @ c) / self.half.sum(axis=1)

    def face_values(self, per_region) -> np.ndarray:
        return np.asarray(per_region)[self.face_region]


# --------------------------------------------------------------------------
# operations

def solid_diffusion_step(c_s, D_s: float, surface_gradient: float, dt: float,
                         geom: ParticleGeometry, c_max: float | None = None) -> np.ndarray:
    """Advance spherical diffusion one implicit step.

    Zero flux at the center; ``dc/dr = surface_gradient`` at ``r = R``.
    """
    if dt <= 0:
        raise DomainError("dt must be > 0")
    src = np.zeros(geom.n)
    src[-1] = geom.R * geom.R * D_s * surface_gradient
    out = kernels.implicit_diffusion(np.asarray(c_s, dtype=float), geom.vol,
                                     D_s * geom.face_area_over_dr, src, dt)
    if not np.all(np.isfinite(out)):
        raise InstabilityError("non-finite solid concentration")
    if c_max is not None:
        tol = _SAT_TOL * c_max
        if out.min() < -tol or out.max() > c_max + tol:
            raise SaturationError("solid concentration left [0, c_max]")
    return out


def surface_gradient(I: float, D_s: float, a_t: float, params: CellParameters,
                     electrode: str, side_current: float = 0.0) -> float:
    """dc/dr at the particle surface for applied current ``I``.

    ``side_current`` is ``j_SEI + j_lpl`` [A/m^3] (negative electrode only).
    """
    if electrode == "p":
        return I / (D_s * a_t * params.A_cell * F * params.L_p)
    return (-I + params.L_n * params.A_cell * side_current) / (
        D_s * a_t * params.A_cell * F * params.L_n)


def pore_wall_flux(I: float, params: CellParameters):
    """Region-wise ion flux ``(J_p, J_s, J_n)`` [mol/(m^3 s)]."""
    return (-I / (params.A_cell * F * params.L_p), 0.0,
            I / (params.A_cell * F * params.L_n))


def electrolyte_mass_step(c_e, I: float, dt: float, params: CellParameters,
                          geom: ElectrolyteGeometry, T: float = T_REF, eps3=None) -> np.ndarray:
    """Advance electrolyte concentration one implicit step."""
    if dt <= 0:
        raise DomainError("dt must be > 0")
    c_e = np.asarray(c_e, dtype=float)
    eps3 = eps3 if eps3 is not None else (params.eps_p, params.eps_s, params.eps_n)
    cmean = geom.region_means(c_e)
    d_eff = [effective_transport(eps3[i], params.brugg, params.D_e_bulk(cmean[i], T))
             for i in range(3)]
    cond = geom.face_values(d_eff) / geom.h
    J_p, _, J_n = pore_wall_flux(I, params)
    src = (1.0 - params.t_plus) * (J_p * geom.half[0] + J_n * geom.half[2])
    out = kernels.implicit_diffusion(c_e, geom.capacity(eps3), cond, src, dt)
    if not np.all(np.isfinite(out)):
        raise InstabilityError("non-finite electrolyte concentration")
    if out.min() <= 0:
        raise NegativeConcentrationError("electrolyte concentration became nonpositive")
    return out


def electrolyte_potential_solve(c_e, I: float, T: float, params: CellParameters,
                                geom: ElectrolyteGeometry, eps3=None):
    """Electrolyte potential (zero at the negative collector) and ``Delta Phi_e``.

    In 1-D the charge balance integrates directly: the ionic current at each
    face is the accumulated pore-wall source, and the potential follows from
    the flux law face by face.
    """
    c_e = np.asarray(c_e, dtype=float)
    if np.any(c_e <= 0):
        raise DomainError("electrolyte concentration must be > 0")
    eps3 = eps3 if eps3 is not None else (params.eps_p, params.eps_s, params.eps_n)
    cmean = geom.region_means(c_e)
    kap = [eps3[i] ** params.brugg * params.kappa_bulk(cmean[i], T) for i in range(3)]
    if not all(math.isfinite(k) and k > 0 for k in kap):
        raise SolverError("singular charge balance: effective conductivity degenerate")
    J_p, _, J_n = pore_wall_flux(I, params)
    node_src = J_p * geom.half[0] + J_n * geom.half[2]
    i_e = F * np.cumsum(node_src)[:-1]
    diff_coeff = 2.0 * R_GAS * T * (1.0 - params.t_plus) * params.v_td / F
    dphi = -i_e * geom.h / geom.face_values(kap) + diff_coeff * np.diff(np.log(c_e))
    phi = np.concatenate(([0.0], np.cumsum(dphi)))
    phi -= phi[-1]
    return phi, float(phi[0] - phi[-1])


def exchange_current_density(c_e_local: float, c_s_surf: float, c_s_max: float,
                             k: float, T: float = T_REF, floor: float = 1e-8) -> float:
    """Symmetric Butler-Volmer exchange current density [A/m^2], floored."""
    if not c_e_local > 0:
        raise DomainError("electrolyte concentration must be > 0")
    if not 0 <= c_s_surf <= c_s_max:
        raise DomainError(f"surface concentration {c_s_surf} outside [0, {c_s_max}]")
    i0 = F * k * math.sqrt(c_e_local) * math.sqrt(c_s_surf) * math.sqrt(c_s_max - c_s_surf)
    return max(i0, floor)


def overpotential(I: float, i_0: float, a_t: float, L: float, A_cell: float,
                  T: float, electrode: str) -> float:
    """Reaction overpotential with symmetric transfer coefficients."""
    if not i_0 > 0 or not a_t > 0:
        raise DomainError("i_0 and a_t must be > 0")
    signed = -I if electrode == "p" else I
    return R_GAS * T / (0.5 * F) * math.asinh(signed / (2.0 * A_cell * a_t * L * i_0))


def soc(c_s_bulk: float, c_s_max: float, params: CellParameters, electrode: str) -> float:
    """Electrode state of charge from the volume-averaged concentration (not clamped)."""
    theta = c_s_bulk / c_s_max
    if electrode == "n":
        return (theta - params.theta_n_0) / (params.theta_n_100 - params.theta_n_0)
    return (params.theta_p_0 - theta) / (params.theta_p_0 - params.theta_p_100)


# --------------------------------------------------------------------------
# state and simulator

@dataclass
class CellState:
    c_s_p: np.ndarray | None
    c_s_n: np.ndarray
    c_e: np.ndarray
    phi_e: np.ndarray
    T: float
    t: float
    aging: deg.AgingState | None = None
    coreshell: cs.PhaseBoundaryState | None = None

    def copy(self) -> "CellState":
        return CellState(
            None if self.c_s_p is None else self.c_s_p.copy(),
            self.c_s_n.copy(), self.c_e.copy(), self.phi_e.copy(), self.T, self.t,
            None if self.aging is None else self.aging.copy(),
            None if self.coreshell is None else self.coreshell.copy(),
        )


@dataclass
class SimOptions:
    soc0: float = 1.0
    max_dt: float | None = None
    max_halvings: int = 8
    v_min: float | None = None
    v_max: float | None = None
    aging: deg.AgingParameters | None = None
    coreshell: cs.CoreShellParameters | None = None
    coreshell_orientation: int | None = None
    R_l_table: ResistanceTable | None = None
    raise_on_error: bool = True


# columns always emitted by simulate()
BASE_COLUMNS = ("t", "I", "V", "SOC_n", "SOC_p", "T")
INTERNAL_COLUMNS = (
    "theta_p_surf", "theta_n_surf", "theta_p", "theta_n", "U_p", "U_n",
    "eta_p", "eta_n", "delta_phi_e", "R_film_total", "extrapolated",
    "electrolyte_li", "solid_li_p", "solid_li_n",
)
AGING_COLUMNS = ("c_SEI", "c_Li", "L_film", "L_SEI", "L_Li", "R_film",
                 "a_t_p", "a_t_n", "eps_p", "eps_n", "j_SEI", "j_lpl")
CORESHELL_COLUMNS = ("r_p", "r_p_norm", "c_surf_p", "orientation")


@dataclass
class Signals:
    V: float
    SOC_n: float
    SOC_p: float
    theta_p_surf: float
    theta_n_surf: float
    theta_p: float
    theta_n: float
    U_p: float
    U_n: float
    eta_p: float
    eta_n: float
    delta_phi_e: float
    R_film_total: float
    R_l: float
    extrapolated: bool
    Phi_s_n: float
    phi_e: np.ndarray = field(repr=False, default=None)


class Simulator:
    """Reusable simulation engine for one parameter set.

    Parameters, OCP tables and grid are read-only, so one instance may be
    shared; each run works on its own :class:`CellState`.
    """

    def __init__(self, params: CellParameters, ocp: OCPSet, grid: SpatialGrid | None = None,
                 options: SimOptions | None = None):
        self.params = params
        self.ocp = ocp
        self.grid = grid or SpatialGrid()
        self.options = options or SimOptions()
        self.aging = self.options.aging
        self.cs_params = self.options.coreshell
        self.geom_p = ParticleGeometry(params.R_p, self.grid.nodes_r_p)
        self.geom_n = ParticleGeometry(params.R_n, self.grid.nodes_r_n)
        self.geom_e = ElectrolyteGeometry(params, self.grid)

    # -- state ------------------------------------------------------------

    def initial_state(self, soc0: float | None = None, T: float = T_REF) -> CellState:
        p = self.params
        soc0 = self.options.soc0 if soc0 is None else soc0
        th_n = p.theta_n_0 + soc0 * (p.theta_n_100 - p.theta_n_0)
        th_p = p.theta_p_0 - soc0 * (p.theta_p_0 - p.theta_p_100)
        c_n = np.full(self.geom_n.n, th_n * p.c_s_max_n)
        c_e = np.full(self.geom_e.n, p.c_e_init)
        aging = deg.AgingState.fresh(p, self.aging) if self.aging is not None else None
        if self.cs_params is not None:
            pb = cs.initial_state(th_p, p.c_s_max_p, p.R_p, self.cs_params,
                                  self.options.coreshell_orientation)
            return CellState(None, c_n, c_e, np.zeros(self.geom_e.n), T, 0.0, aging, pb)
        c_p = np.full(self.geom_p.n, th_p * p.c_s_max_p)
        return CellState(c_p, c_n, c_e, np.zeros(self.geom_e.n), T, 0.0, aging, None)

    def _eps3(self, state):
        p = self.params
        if state.aging is None:
            return (p.eps_p, p.eps_s, p.eps_n)
        return (state.aging.eps_p, p.eps_s, state.aging.eps_n)

    def _areas(self, state):
        if state.aging is None:
            return self.params.a_p, self.params.a_n
        return state.aging.a_t_p, state.aging.a_t_n

    def film_resistance_total(self, state) -> float:
        p = self.params
        a_n_t = self._areas(state)[1]
        r = deg.lumped_film_resistance(p.sei_lumped, a_n_t, p.A_cell, p.L_n)
        if state.aging is not None:
            r += state.aging.R_film
        return r

    # -- evaluation -------------------------------------------------------

    def _surface_gradients(self, state, I, side_current=0.0):
        p = self.params
        a_p, a_n = self._areas(state)
        D_p = p.D_s("p", state.T)
        D_n = p.D_s("n", state.T)
        g_p = surface_gradient(I, D_p, a_p, p, "p")
        g_n = surface_gradient(I, D_n, a_n, p, "n", side_current)
        return D_p, D_n, g_p, g_n

    def evaluate(self, state: CellState, I: float, side_current: float = 0.0) -> Signals:
        """Terminal voltage and internal signals at ``state`` under current ``I``."""
        p, T = self.params, state.T
        D_p, D_n, g_p, g_n = self._surface_gradients(state, I, side_current)
        gn = self.geom_n
        c_n_surf = float(state.c_s_n[-1])
        theta_n = gn.mean(state.c_s_n) / p.c_s_max_n
        if state.coreshell is not None:
            pb = state.coreshell
            c_p_surf = pb.surface_concentration(g_p)
            theta_p = pb.mean_concentration() / p.c_s_max_p
            theta_p_ocp = theta_p
        else:
            c_p_surf = float(state.c_s_p[-1])
            theta_p = self.geom_p.mean(state.c_s_p) / p.c_s_max_p
            theta_p_ocp = c_p_surf / p.c_s_max_p
        theta_p_surf = c_p_surf / p.c_s_max_p
        theta_n_surf = c_n_surf / p.c_s_max_n

        eps3 = self._eps3(state)
        phi, dphi = electrolyte_potential_solve(state.c_e, I, T, p, self.geom_e, eps3)
        cmean = self.geom_e.region_means(state.c_e)
        a_p, a_n = self._areas(state)
        i0_p = exchange_current_density(cmean[0], _clip(c_p_surf, p.c_s_max_p), p.c_s_max_p,
                                        p.k_p, T, p.i0_floor)
        i0_n = exchange_current_density(cmean[2], _clip(c_n_surf, p.c_s_max_n), p.c_s_max_n,
                                        p.k_n, T, p.i0_floor)
        eta_p = overpotential(I, i0_p, a_p, p.L_p, p.A_cell, T, "p")
        eta_n = overpotential(I, i0_n, a_n, p.L_n, p.A_cell, T, "n")

        ocp = self.ocp
        U_p = ocp.U_p(theta_p_ocp)
        U_n = ocp.U_n(theta_n_surf)
        extrap = not (ocp.positive_in_domain(theta_p_ocp) and ocp.negative.in_domain(theta_n_surf))

        soc_n = soc(theta_n * p.c_s_max_n, p.c_s_max_n, p, "n")
        soc_p = soc(theta_p * p.c_s_max_p, p.c_s_max_p, p, "p")
        R_l = p.R_l if self.options.R_l_table is None else self.options.R_l_table(soc_n, I)
        R_film = self.film_resistance_total(state)
        V = U_p - U_n + eta_p - eta_n + dphi - I * (R_l + p.R_el + R_film)
        return Signals(V, soc_n, soc_p, theta_p_surf, theta_n_surf, theta_p, theta_n,
                       U_p, U_n, eta_p, eta_n, dphi, R_film, R_l, extrap,
                       U_n + eta_n + R_film * I, phi)

    def side_currents(self, state: CellState, sig: Signals, I: float):
        if state.aging is None or self.aging is None:
            return 0.0, 0.0
        c_n_surf = float(state.c_s_n[-1])
        j_sei = deg.sei_current(state.aging, sig.Phi_s_n, I, state.T, self.aging, c_n_surf)
        j_lpl = deg.plating_current(state.aging, sig.Phi_s_n, I, state.T, self.aging)
        return j_sei, j_lpl

    # -- stepping ---------------------------------------------------------

    def step(self, state: CellState, I: float, dt: float) -> CellState:
        """One step of length ``dt`` (no sub-stepping)."""
        p = self.params
        j_sei = j_lpl = 0.0
        if state.aging is not None and self.aging is not None:
            sig = self.evaluate(state, I)
            j_sei, j_lpl = self.side_currents(state, sig, I)
        D_p, D_n, g_p, g_n = self._surface_gradients(state, I, j_sei + j_lpl)
        c_n = solid_diffusion_step(state.c_s_n, D_n, g_n, dt, self.geom_n, p.c_s_max_n)
        if state.coreshell is not None:
            pb = cs.coreshell_step(state.coreshell, g_p, D_p, dt, self.cs_params, I, p.c_s_max_p)
            c_p = None
        else:
            pb = None
            c_p = solid_diffusion_step(state.c_s_p, D_p, g_p, dt, self.geom_p, p.c_s_max_p)
        c_e = electrolyte_mass_step(state.c_e, I, dt, p, self.geom_e, state.T, self._eps3(state))
        aging = state.aging
        if aging is not None and self.aging is not None:
            aging = deg.advance_aging(aging, j_sei, j_lpl, dt, p, self.aging)
        return CellState(c_p, c_n, c_e, state.phi_e, state.T, state.t + dt, aging, pb)

    def advance(self, state: CellState, I: float, dt: float) -> CellState:
        """Advance by ``dt`` with ``max_dt`` sub-steps, halving on solver failure."""
        n_sub = 1
        if self.options.max_dt is not None and dt > self.options.max_dt:
            n_sub = int(math.ceil(dt / self.options.max_dt - 1e-12))
        last_err = None
        for _ in range(self.options.max_halvings + 1):
            try:
                s = state
                h = dt / n_sub
                for _k in range(n_sub):
                    s = self.step(s, I, h)
                s.t = state.t + dt
                return s
            except (SaturationError, InstabilityError, NegativeConcentrationError) as exc:
                last_err = exc
                n_sub *= 2
        raise last_err

    # -- time loop --------------------------------------------------------

    def run(self, profile: TimeSeries, state: CellState | None = None) -> "SimulationResult":
        """Simulate ``profile`` (columns ``t``, ``I`` and optionally ``T``)."""
        t = np.asarray(profile.t, dtype=float)
        I = np.asarray(profile.I, dtype=float)
        if t.size == 0:
            raise DomainError("empty profile")
        if np.any(np.diff(t) <= 0):
            raise DomainError("profile times must be strictly increasing")
        T = np.asarray(profile["T"], dtype=float) if "T" in profile else np.full(t.size, T_REF)
        if state is None:
            state = self.initial_state(T=float(T[0]))
        state.t = float(t[0])
        rec = _Recorder(self, t.size)
        status, error = "completed", None
        opts = self.options
        for j in range(t.size):
            state.T = float(T[j])
            try:
                sig = self.evaluate(state, float(I[j]))
            except (SolverError, DomainError) as exc:
                status, error = "failed", SimulationError(str(exc), float(t[j]))
                break
            rec.add(j, state, float(I[j]), sig)
            if (opts.v_min is not None and sig.V < opts.v_min) or (
                    opts.v_max is not None and sig.V > opts.v_max):
                status = "cutoff"
                break
            if j + 1 < t.size:
                try:
                    state = self.advance(state, float(I[j]), float(t[j + 1] - t[j]))
                except (SolverError, DomainError) as exc:
                    status, error = "failed", SimulationError(str(exc), float(t[j]))
                    break
        res = rec.result(status, error, state)
        if error is not None and opts.raise_on_error:
            raise error
        if res.columns["extrapolated"].any():
            warnings.warn("OCP tables were evaluated outside their domain", ExtrapolationWarning,
                          stacklevel=2)
        return res


def _clip(c, c_max):
    # tolerance-level excursions from the implicit solve
    return min(max(c, 0.0), c_max)


class _Recorder:
    def __init__(self, sim: Simulator, n: int):
        self.sim = sim
        self.n = 0
        cols = list(BASE_COLUMNS) + list(INTERNAL_COLUMNS)
        if sim.aging is not None:
            cols += AGING_COLUMNS
        if sim.cs_params is not None:
            cols += CORESHELL_COLUMNS
        self.data = {c: np.zeros(n) for c in cols}
        self.data["extrapolated"] = np.zeros(n, dtype=bool)

    def add(self, j, state, I, sig):
        d, sim, p = self.data, self.sim, self.sim.params
        d["t"][j] = state.t
        d["I"][j] = I
        d["V"][j] = sig.V
        d["SOC_n"][j] = sig.SOC_n
        d["SOC_p"][j] = sig.SOC_p
        d["T"][j] = state.T
        for k in ("theta_p_surf", "theta_n_surf", "theta_p", "theta_n", "U_p", "U_n",
                  "eta_p", "eta_n", "delta_phi_e", "R_film_total", "extrapolated"):
            d[k][j] = getattr(sig, k)
        eps3 = sim._eps3(state)
        d["electrolyte_li"][j] = float(np.dot(sim.geom_e.capacity(eps3), state.c_e)) * p.A_cell
        four_pi = 4.0 * math.pi
        n_particles_n = p.nu_n * p.A_cell * p.L_n / (four_pi * sim.geom_n.total_vol)
        d["solid_li_n"][j] = sim.geom_n.content(state.c_s_n) * four_pi * n_particles_n
        n_particles_p = p.nu_p * p.A_cell * p.L_p / (four_pi * p.R_p ** 3 / 3.0)
        if state.coreshell is not None:
            d["solid_li_p"][j] = state.coreshell.total_lithium() * four_pi * n_particles_p
        else:
            d["solid_li_p"][j] = sim.geom_p.content(state.c_s_p) * four_pi * n_particles_p
        if "c_SEI" in d:
            a = state.aging
            j_sei, j_lpl = sim.side_currents(state, sig, I)
            for k in ("c_SEI", "c_Li", "L_film", "L_SEI", "L_Li", "R_film",
                      "a_t_p", "a_t_n", "eps_p", "eps_n"):
                d[k][j] = getattr(a, k)
            d["j_SEI"][j] = j_sei
            d["j_lpl"][j] = j_lpl
        if "r_p" in d:
            pb = state.coreshell
            d["r_p"][j] = pb.r_p
            d["r_p_norm"][j] = pb.r_p / pb.R
            d["c_surf_p"][j] = sig.theta_p_surf * p.c_s_max_p
            d["orientation"][j] = pb.orientation
        self.n = j + 1

    def result(self, status, error, state):
        cols = {k: v[: self.n] for k, v in self.data.items()}
        return SimulationResult(cols, status, error, state)


class SimulationResult(TimeSeries):
    """Simulation output columns plus run status and the final state."""

    def __init__(self, columns, status="completed", error=None, final_state=None):
        super().__init__(columns)
        self.status = status
        self.error = error
        self.final_state = final_state

    @property
    def completed(self) -> bool:
        return self.status in ("completed", "cutoff")

    def hysteresis_features(self):
        """Feature matrix ``[I, SOC_n, SOC_p, r_p/R_p, theta_p_surf, theta_n_surf,
        V_cs, eta_p, eta_n, delta_phi_e]`` for the hysteresis model."""
        c = self.columns
        r = c["r_p_norm"] if "r_p_norm" in c else np.ones(len(self))
        return np.column_stack([c["I"], c["SOC_n"], c["SOC_p"], r, c["theta_p_surf"],
                                c["theta_n_surf"], c["V"], c["eta_p"], c["eta_n"],
                                c["delta_phi_e"]])


def terminal_voltage(state: CellState, I: float, params: CellParameters, ocp: OCPSet,
                     R_film: float = 0.0, grid: SpatialGrid | None = None) -> float:
    """Terminal voltage of ``state``; ``R_film`` adds to any film carried by the state."""
    if grid is None:
        grid = SpatialGrid(n_r=state.c_s_n.size, n_x_p=3, n_x_s=3, n_x_n=3)
        n_e = state.c_e.size
        if n_e != grid.n_x:
            raise DomainError("pass the grid used to build the state")
    sim = Simulator(params, ocp, grid)
    sig = sim.evaluate(state, I)
    return sig.V - I * R_film


def simulate(params: CellParameters, grid: SpatialGrid | None, profile: TimeSeries,
             ocp: OCPSet, options: SimOptions | None = None) -> SimulationResult:
    """Run one simulation over ``profile``."""
    return Simulator(params, ocp, grid, options).run(profile)


def constant_current_profile(I: float, duration: float, dt: float, T: float = T_REF) -> TimeSeries:
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    return TimeSeries({"t": t, "I": np.full(n, float(I)), "T": np.full(n, T)})
