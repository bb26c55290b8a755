import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from batwb.degradation import (AgingParameters, AgingState, advance_aging, discharged_capacity,
                               film_growth, film_resistance, lam_step, lithium_lost,
                               plating_current, porosity_update, sei_current, species_rates)
from batwb.errors import DomainError, PorosityCollapseError
from batwb.espm import SimOptions, Simulator, constant_current_profile
from batwb.params import SpatialGrid


@pytest.fixture
def state(nmc):
    return AgingState.fresh(nmc)


def test_sei_current_off(state):
    assert sei_current(state, 0.1, 1.0, 298.15, AgingParameters()) == 0.0
    assert sei_current(state, 0.1, 1.0, 298.15,
                       AgingParameters(k_f_ref=1e-12, c_solv_surf=0.0)) == 0.0


def test_sei_current_monotone_in_potential(state):
    p = AgingParameters(k_f_ref=1e-12)
    vals = [abs(sei_current(state, phi, 1.0, 298.15, p)) for phi in (0.0, 0.05, 0.1, 0.2)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_plating_off(state):
    assert plating_current(state, 0.1, 1.0, 298.15, AgingParameters()) == 0.0


@given(st.floats(-0.3, 0.3))
def test_plating_to_sei_ratio_independent_of_potential(phi):
    from batwb.params import preset

    s = AgingState.fresh(preset("nmc_graphite"))
    p = AgingParameters(k_f_ref=1e-12, i_0_lpl=1e-5)
    r = plating_current(s, phi, 1.0, 298.15, p) / sei_current(s, phi, 1.0, 298.15, p)
    r0 = plating_current(s, 0.0, 1.0, 298.15, p) / sei_current(s, 0.0, 1.0, 298.15, p)
    assert r == pytest.approx(r0, rel=1e-12)


def test_species_rates_limits():
    F = 96485.33212
    p1 = AgingParameters(beta_lpl=1.0)
    assert species_rates(-3.0, -2.0, p1)[1] == 0.0
    p0 = AgingParameters(beta_lpl=0.0)
    dc_sei, dc_li = species_rates(0.0, -2.0, p0)
    assert dc_sei == 0.0
    assert dc_li == pytest.approx(2.0 / (2 * F), rel=1e-15)


def test_film_growth_zero_and_split():
    p = AgingParameters()
    assert film_growth((0.0, 0.0), 3e5, p)[0] == 0.0
    total, sei, li = film_growth((2.0, 0.0), 3e5, p)
    assert li == 0.0 and total == sei
    # (mol/m^3/s) * (kg/mol) / (kg/m^3) / (1/m) = m/s
    assert sei == pytest.approx(2.0 * 0.162 / 1690.0 / 3e5, rel=1e-15)


def test_film_resistance_values():
    p = AgingParameters(kappa_SEI=5e-6)
    assert film_resistance(0.0, 3e5, p, 0.1, 7e-5) == 0.0
    # 1e-7 / (3e5 * 0.1 * 7e-5 * 5e-6) evaluated separately
    assert film_resistance(1e-7, 3e5, p, 0.1, 7e-5) == pytest.approx(0.009523809523809525,
                                                                     rel=1e-12)
    assert film_resistance(2e-7, 3e5, p, 0.1, 7e-5) == pytest.approx(
        2 * film_resistance(1e-7, 3e5, p, 0.1, 7e-5), rel=1e-15)


def test_lam_step_cases():
    assert lam_step(0.0, 3e5, 0.0, 0.0, 100.0) == (0.0, 3e5)
    # fully inactive: nothing left to lose
    a_ina, a_t = lam_step(3e5 + 1e4, 3e5, 1e4, 1e-3, 100.0)
    assert a_t == 0.0 and a_ina == 3e5 + 1e4
    a_ina, a_t = lam_step(0.0, 3e5, 0.0, 1e-4, 50.0)
    assert a_t == pytest.approx(3e5 * np.exp(-5e-3), rel=1e-14)
    with pytest.raises(DomainError):
        lam_step(4e5, 3e5, 0.0, 1e-4, 1.0)


def test_porosity(nmc):
    assert porosity_update("p", 0.0, 0.0, 0.0, nmc) == nmc.eps_p
    assert porosity_update("n", 2e4, 2e4, 0.0, nmc) == nmc.eps_n
    assert porosity_update("n", 0.0, 0.0, 1e-8, nmc) < porosity_update("n", 0.0, 0.0, 0.0, nmc)
    with pytest.raises(PorosityCollapseError):
        porosity_update("n", 0.0, 0.0, 1e-3, nmc)


def test_advance_aging_conserves_lithium_bookkeeping(nmc, state):
    p = AgingParameters(k_f_ref=1e-12, i_0_lpl=1e-5, beta_lpl=0.3)
    j_sei = sei_current(state, 0.05, 1.0, 298.15, p)
    j_lpl = plating_current(state, 0.05, 1.0, 298.15, p)
    new = advance_aging(state, j_sei, j_lpl, 60.0, nmc, p)
    F = 96485.33212
    # both side currents consume lithium at 2F per mole of product
    lost = -(j_sei + j_lpl) / (2 * F) * 60.0 * 2 * nmc.A_cell * nmc.L_n
    assert lithium_lost(new, nmc) == pytest.approx(lost, rel=1e-12)
    assert new.L_film == new.L_SEI + new.L_Li > 0
    assert new.R_film > 0


def test_discharged_capacity_interpolates_cutoff():
    class R(dict):
        status = "cutoff"

    r = R(t=np.array([0.0, 3600.0, 7200.0]), I=np.array([1.0, 1.0, 1.0]),
          V=np.array([3.5, 3.2, 2.8]))
    # crossing of 3.0 V at the middle of the last interval
    assert discharged_capacity(r, 3.0) == pytest.approx(1.5, rel=1e-15)
    r.status = "completed"
    assert discharged_capacity(r, 3.0) == pytest.approx(2.0, rel=1e-15)


def test_sei_grows_and_film_resistance_lowers_voltage(nmc, nmc_ocp, quiet):
    ag = AgingParameters(k_f_ref=1e-11)
    prof = constant_current_profile(nmc.capacity / 2, 1800.0, 30.0)
    grid = SpatialGrid(n_r=8, n_x_p=4, n_x_s=3, n_x_n=4)
    fresh = Simulator(nmc, nmc_ocp, grid, SimOptions(soc0=0.9)).run(prof)
    aged = Simulator(nmc, nmc_ocp, grid, SimOptions(soc0=0.9, aging=ag)).run(prof)
    assert np.all(np.diff(aged.L_SEI) >= 0) and aged.L_SEI[-1] > 0
    assert aged.V[-1] < fresh.V[-1]
