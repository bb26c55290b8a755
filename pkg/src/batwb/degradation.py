"""Negative-electrode side reactions, film growth and loss of active material.

Side currents are lumped over the negative particle. Fracture and isolation
act on both electrodes. All rates are per unit electrode volume.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import F, R_GAS, T_REF
from .errors import DomainError, PorosityCollapseError

_NONNEG = (
    "k_f_ref", "c_solv_surf", "alpha_s", "i_0_lpl", "beta_prime_p",
    "beta_prime_n", "a_f_p", "a_f_n", "Ea_k_f", "kappa_SEI",
)


@dataclass(frozen=True)
class AgingParameters:
    k_f_ref: float = 0.0          # m/s
    c_solv_surf: float = 4541.0   # mol/m^3
    alpha_s: float = 0.5
    i_0_lpl: float = 0.0          # A/m^2
    beta_lpl: float = 0.0
    M_SEI: float = 0.162          # kg/mol
    M_Li: float = 6.94e-3
    rho_SEI: float = 1690.0       # kg/m^3
    rho_Li: float = 534.0
    kappa_SEI: float = 5e-6       # S/m
    beta_prime_p: float = 0.0     # 1/s
    beta_prime_n: float = 0.0
    a_f_p: float = 0.0            # 1/m
    a_f_n: float = 0.0
    Ea_k_f: float = 0.0           # J/mol, optional Arrhenius factor on k_f

    def __post_init__(self):
        for name in _NONNEG:
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and >= 0 (got {v})")
        if not 0 <= self.beta_lpl <= 1:
            raise DomainError("beta_lpl must lie in [0, 1]")
        for name in ("M_SEI", "M_Li", "rho_SEI", "rho_Li"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0")

    @classmethod
    def zero(cls) -> "AgingParameters":
        """All aging rates switched off (material constants kept)."""
        return cls()

    def k_f(self, c_s_n: float | None = None, T: float = T_REF) -> float:
        # no concentration dependence is modeled; c_s_n kept for the call signature
        if self.Ea_k_f == 0.0 or T == T_REF:
            return self.k_f_ref
        return self.k_f_ref * math.exp(-self.Ea_k_f / R_GAS * (1.0 / T - 1.0 / T_REF))

    def replace(self, **changes) -> "AgingParameters":
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class AgingState:
    c_SEI: float
    c_Li: float
    L_film: float
    L_SEI: float
    L_Li: float
    a_ina_p: float
    a_ina_n: float
    a_t_p: float
    a_t_n: float
    eps_p: float
    eps_n: float
    R_film: float

    @classmethod
    def fresh(cls, cell, aging: AgingParameters | None = None) -> "AgingState":
        aging = aging or AgingParameters()
        a_t_p = cell.a_p + aging.a_f_p
        a_t_n = cell.a_n + aging.a_f_n
        eps_p = porosity_update("p", 0.0, aging.a_f_p, 0.0, cell)
        eps_n = porosity_update("n", 0.0, aging.a_f_n, 0.0, cell)
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, a_t_p, a_t_n, eps_p, eps_n, 0.0)

    def copy(self) -> "AgingState":
        return dataclasses.replace(self)


def _tafel_factor(Phi_s_n, R_film, I, T, alpha_s):
    return math.exp(-alpha_s * F / (R_GAS * T) * (Phi_s_n - R_film * I))


def sei_current(state: AgingState, Phi_s_n: float, I: float, T: float,
                params: AgingParameters, c_s_n: float | None = None) -> float:
    """SEI side-reaction current density [A/m^3] (nonpositive)."""
    if T <= 0:
        raise DomainError("T must be > 0")
    if state.a_t_n <= 0:
        raise DomainError("total negative specific area must be > 0")
    kf = params.k_f(c_s_n, T)
    if kf == 0.0 or params.c_solv_surf == 0.0:
        return 0.0
    return -F * state.a_t_n * kf * params.c_solv_surf * _tafel_factor(
        Phi_s_n, state.R_film, I, T, params.alpha_s)


def plating_current(state: AgingState, Phi_s_n: float, I: float, T: float,
                    params: AgingParameters) -> float:
    """Irreversible lithium-plating current density [A/m^3] (nonpositive)."""
    if T <= 0:
        raise DomainError("T must be > 0")
    if state.a_t_n <= 0:
        raise DomainError("total negative specific area must be > 0")
    if params.i_0_lpl == 0.0:
        return 0.0
    return -2.0 * state.a_t_n * params.i_0_lpl * _tafel_factor(
        Phi_s_n, state.R_film, I, T, params.alpha_s)


def species_rates(j_SEI: float, j_lpl: float, params: AgingParameters):
    """Return ``(dc_SEI/dt, dc_Li/dt)`` [mol/(m^3 s)]."""
    dc_sei = -(j_SEI / (2 * F) + j_lpl / (2 * F) * params.beta_lpl)
    dc_li = -j_lpl / (2 * F) * (1.0 - params.beta_lpl)
    return dc_sei, dc_li


def film_growth(rates, a_n_t: float, params: AgingParameters):
    """Film thickening rate split into SEI and plated-lithium parts.

    Returns ``(dL_film/dt, dL_SEI/dt, dL_Li/dt)`` in m/s.
    """
    if a_n_t <= 0:
        raise DomainError("a_n_t must be > 0")
    dc_sei, dc_li = rates
    d_sei = dc_sei * params.M_SEI / params.rho_SEI / a_n_t
    d_li = dc_li * params.M_Li / params.rho_Li / a_n_t
    return d_sei + d_li, d_sei, d_li


def film_resistance(L_SEI: float, a_n_t: float, params: AgingParameters,
                    A_cell: float, L_n: float) -> float:
    """SEI film resistance [Ohm]."""
    if L_SEI == 0.0:
        return 0.0
    den = a_n_t * A_cell * L_n * params.kappa_SEI
    if not den > 0:
        raise DomainError("film resistance denominator must be > 0")
    return L_SEI / den


def lumped_film_resistance(lumped: float, a_n_t: float, A_cell: float, L_n: float) -> float:
    """Film resistance from the lumped ratio ``L_SEI / kappa_SEI``."""
    if lumped == 0.0:
        return 0.0
    return lumped / (a_n_t * A_cell * L_n)


def lam_step(a_ina: float, a_fresh: float, a_f: float, beta_prime: float, dt: float):
    """Advance the inactive area exactly over ``dt``.

    The rate equation is linear, so its exponential solution is used.
    Returns ``(a_ina_new, a_t_new)``.
    """
    ceiling = a_fresh + a_f
    if a_ina > ceiling:
        raise DomainError("inactive area exceeds the available area")
    if beta_prime == 0.0:
        return a_ina, ceiling - a_ina
    decay = math.exp(-beta_prime * dt)
    a_t = (ceiling - a_ina) * decay
    return ceiling - a_t, a_t


def porosity_update(electrode: str, a_ina: float, a_f: float, L_film: float, cell) -> float:
    """Current porosity of ``electrode`` ('p' or 'n') after fracture, isolation and film growth."""
    if electrode == "p":
        eps = cell.eps_p + (a_ina - a_f) * cell.R_p / 3.0
    else:
        eps = cell.eps_n + (a_ina - a_f) * cell.R_n / 3.0 - cell.nu_n * 3.0 * L_film / cell.R_n
    if eps <= 0:
        raise PorosityCollapseError(f"porosity of electrode {electrode} collapsed ({eps:.3g})")
    if eps >= 1:
        warnings.warn(f"porosity of electrode {electrode} clamped below 1", RuntimeWarning, stacklevel=2)
        eps = 1.0 - 1e-9
    return eps


def advance_aging(state: AgingState, j_SEI: float, j_lpl: float, dt: float,
                  cell, params: AgingParameters) -> AgingState:
    """Integrate the aging ODEs over ``dt`` with side currents held constant."""
    dc_sei, dc_li = species_rates(j_SEI, j_lpl, params)
    _, dl_sei, dl_li = film_growth((dc_sei, dc_li), state.a_t_n, params)
    new = state.copy()
    new.c_SEI = state.c_SEI + dc_sei * dt
    new.c_Li = state.c_Li + dc_li * dt
    new.L_SEI = state.L_SEI + dl_sei * dt
    new.L_Li = state.L_Li + dl_li * dt
    new.L_film = new.L_SEI + new.L_Li
    new.a_ina_p, new.a_t_p = lam_step(state.a_ina_p, cell.a_p, params.a_f_p, params.beta_prime_p, dt)
    new.a_ina_n, new.a_t_n = lam_step(state.a_ina_n, cell.a_n, params.a_f_n, params.beta_prime_n, dt)
    new.eps_p = porosity_update("p", new.a_ina_p, params.a_f_p, 0.0, cell)
    new.eps_n = porosity_update("n", new.a_ina_n, params.a_f_n, new.L_film, cell)
    new.R_film = film_resistance(new.L_SEI, new.a_t_n, params, cell.A_cell, cell.L_n)
    return new


def aging_coupled_step(sim, state, I: float, dt: float):
    """One coupled electrochemical + aging step.

    Side currents are evaluated from ``state``, injected into the negative
    particle boundary flux for the electrochemical step, and used with the
    same values to integrate the aging ODEs.
    """
    if state.aging is None:
        raise DomainError("state carries no aging state")
    return sim.step(state, I, dt)


def lithium_lost(state: AgingState, cell) -> float:
    """Cyclable lithium consumed by SEI and plating [mol].

    One mole of SEI binds two moles of lithium, and plated lithium is
    counted on the same 2F basis, so the loss is ``2 A L_n (c_SEI + c_Li)``.
    """
    return 2.0 * cell.A_cell * cell.L_n * (state.c_SEI + state.c_Li)


def discharged_capacity(result, v_cutoff: float | None = None) -> float:
    """Charge delivered by a discharge run [Ah].

    With ``v_cutoff`` and a run that stopped at it, the crossing inside the
    last interval is located by linear interpolation of the voltage.
    """
    t = np.asarray(result["t"], float)
    I = np.asarray(result["I"], float)
    V = np.asarray(result["V"], float)
    if t.size < 2:
        return 0.0
    q = float(np.sum(I[:-1] * np.diff(t)))
    if result.status == "cutoff" and v_cutoff is not None and V[-2] != V[-1]:
        # the last sample is past the limit; drop the part of the final
        # interval after the crossing
        frac = (V[-2] - v_cutoff) / (V[-2] - V[-1])
        q -= I[-2] * (t[-1] - t[-2]) * (1.0 - min(max(frac, 0.0), 1.0))
    return q / 3600.0


def cycle_aging(sim, n_cycles: int, I_charge: float, I_discharge: float, v_min: float,
                v_max: float, dt: float = 10.0, rest: float = 600.0, soc0: float = 0.05,
                max_phase: float = 8 * 3600.0):
    """Repeated CC charge / rest / CC discharge / rest cycles from ``soc0``.

    ``sim`` is a :class:`~batwb.espm.Simulator` with aging enabled. Returns
    ``(capacities_Ah, final_state)`` with one discharged capacity per cycle.
    """
    from .espm import SimOptions, Simulator
    from .timeseries import TimeSeries

    if I_charge <= 0 or I_discharge <= 0:
        raise DomainError("give both currents as positive magnitudes")

    def phase(state, current, duration, lo, hi):
        n = int(round(duration / dt)) + 1
        prof = TimeSeries({"t": state.t + np.arange(n) * dt, "I": np.full(n, current)})
        opts = SimOptions(**{**sim.options.__dict__, "v_min": lo, "v_max": hi})
        return Simulator(sim.params, sim.ocp, sim.grid, opts).run(prof, state)

    state = sim.initial_state(soc0)
    caps = []
    for _ in range(n_cycles):
        state = phase(state, -I_charge, max_phase, None, v_max).final_state
        state = phase(state, 0.0, rest, None, None).final_state
        res = phase(state, I_discharge, max_phase, v_min, None)
        caps.append(discharged_capacity(res, v_min))
        state = phase(res.final_state, 0.0, rest, None, None).final_state
    return np.array(caps), state
