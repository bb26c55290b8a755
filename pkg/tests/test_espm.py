import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from batwb.errors import DomainError
from batwb.espm import (ElectrolyteGeometry, ParticleGeometry, SimOptions, Simulator,
                        constant_current_profile, electrolyte_mass_step,
                        electrolyte_potential_solve, exchange_current_density, overpotential,
                        simulate, soc, solid_diffusion_step)
from batwb.params import SpatialGrid, effective_transport
from batwb.timeseries import TimeSeries


# -- transport -----------------------------------------------------------

def test_effective_transport_identity_porosity():
    assert effective_transport(1.0, 1.5, 2.0e-10) == 2.0e-10


def test_effective_transport_values():
    # frozen from 0.3**1.5 evaluated by hand: 0.1643167672515498
    assert effective_transport(0.3, 1.5, 2.0e-10) == pytest.approx(3.2863e-11, rel=1e-4)
    assert effective_transport(0.3, 1.5, 1.0) == pytest.approx(0.164317, rel=1e-5)


@pytest.mark.parametrize("eps", [0.0, -0.1, 1.2])
def test_effective_transport_rejects_porosity(eps):
    with pytest.raises(DomainError):
        effective_transport(eps, 1.5, 1.0)


# -- solid diffusion -------------------------------------------------------

def test_solid_uniform_zero_flux_unchanged(nmc):
    geom = ParticleGeometry(nmc.R_p, 20)
    c = np.full(20, 0.4 * nmc.c_s_max_p)
    out = solid_diffusion_step(c, nmc.D_s_p_ref, 0.0, 10.0, geom)
    # identical up to round-off of the implicit solve
    np.testing.assert_allclose(out, c, rtol=1e-14, atol=0)


def test_solid_constant_flux_mass_balance(nmc):
    geom = ParticleGeometry(nmc.R_n, 25)
    c = np.full(25, 0.5 * nmc.c_s_max_n)
    D, g, dt, n = nmc.D_s_n_ref, -2e9, 2.0, 300
    m0 = geom.content(c)
    for _ in range(n):
        c = solid_diffusion_step(c, D, g, dt, geom)
    expected = nmc.R_n ** 2 * D * g * dt * n
    assert (geom.content(c) - m0) / expected == pytest.approx(1.0, rel=1e-8)


def test_solid_rejects_bad_dt(nmc):
    geom = ParticleGeometry(nmc.R_p, 10)
    with pytest.raises(DomainError):
        solid_diffusion_step(np.ones(10), 1e-14, 0.0, 0.0, geom)


# -- electrolyte -----------------------------------------------------------

def test_electrolyte_rest_uniform_unchanged(nmc):
    geom = ElectrolyteGeometry(nmc, SpatialGrid())
    c = np.full(geom.n, nmc.c_e_init)
    np.testing.assert_allclose(electrolyte_mass_step(c, 0.0, 5.0, nmc, geom), c, rtol=0,
                               atol=1e-12 * nmc.c_e_init)


def test_potential_zero_current(nmc):
    geom = ElectrolyteGeometry(nmc, SpatialGrid())
    phi, dphi = electrolyte_potential_solve(np.full(geom.n, 1000.0), 0.0, 298.15, nmc, geom)
    assert np.all(phi == 0.0) and dphi == 0.0


def test_potential_ohmic_closed_form(nmc):
    grid = SpatialGrid(n_x_p=7, n_x_s=4, n_x_n=9)
    geom = ElectrolyteGeometry(nmc, grid)
    c, I, T = 1000.0, 3.0, 298.15
    _, dphi = electrolyte_potential_solve(np.full(geom.n, c), I, T, nmc, geom)
    k = [effective_transport(e, nmc.brugg, nmc.kappa_bulk(c, T))
         for e in (nmc.eps_p, nmc.eps_s, nmc.eps_n)]
    # ionic current rises linearly across each electrode and is flat in the separator
    expected = -I / nmc.A_cell * (nmc.L_p / (2 * k[0]) + nmc.L_s / k[1] + nmc.L_n / (2 * k[2]))
    assert dphi == pytest.approx(expected, rel=1e-10)
    _, dphi2 = electrolyte_potential_solve(np.full(geom.n, c), 2 * I, T, nmc, geom)
    assert dphi2 == pytest.approx(2 * dphi, rel=1e-12)


# -- kinetics --------------------------------------------------------------

def test_exchange_current_closed_form():
    i0 = exchange_current_density(1000.0, 2.5e4, 5e4, 2e-11, 298.15)
    # 96485.33212 * 2e-11 * sqrt(1000) * 2.5e4 evaluated separately
    assert i0 == pytest.approx(1.5255670514850128, rel=1e-12)


@pytest.mark.parametrize("c_s", [0.0, 5e4])
def test_exchange_current_floor(c_s):
    assert exchange_current_density(1000.0, c_s, 5e4, 2e-11, floor=1e-8) == 1e-8


def test_overpotential_unit_argument():
    i_0, a, L, A = 2.0, 3e5, 7e-5, 0.1
    I = 2 * A * a * L * i_0  # asinh argument equal to one
    eta = overpotential(I, i_0, a, L, A, 298.15, "n")
    # 0.045287 with R = 8.314 and F = 96485; CODATA constants move the 6th digit
    assert eta == pytest.approx(0.045287, rel=1e-4)
    assert eta == pytest.approx(8.314462618 * 298.15 / (0.5 * 96485.33212) * math.asinh(1.0),
                                rel=1e-14)
    assert overpotential(0.0, i_0, a, L, A, 298.15, "n") == 0.0


@given(st.floats(-50, 50), st.floats(0.01, 10))
def test_overpotential_antisymmetric(I, i_0):
    a = overpotential(I, i_0, 3e5, 7e-5, 0.1, 298.15, "p")
    b = overpotential(-I, i_0, 3e5, 7e-5, 0.1, 298.15, "p")
    assert a == pytest.approx(-b, abs=1e-15)


def test_soc_values(nmc):
    p = nmc.replace(theta_n_0=0.03, theta_n_100=0.85)
    assert soc(0.44 * p.c_s_max_n, p.c_s_max_n, p, "n") == pytest.approx(0.5, abs=1e-15)
    assert soc(p.theta_n_100 * p.c_s_max_n, p.c_s_max_n, p, "n") == pytest.approx(1.0)
    assert soc(p.theta_p_0 * p.c_s_max_p, p.c_s_max_p, p, "p") == pytest.approx(0.0, abs=1e-15)


# -- terminal voltage and full runs ---------------------------------------

def test_equilibrium_voltage(nmc, nmc_ocp):
    sim = Simulator(nmc, nmc_ocp, SpatialGrid())
    st0 = sim.initial_state(0.6)
    sig = sim.evaluate(st0, 0.0)
    assert sig.V == pytest.approx(nmc_ocp.U_p(sig.theta_p) - nmc_ocp.U_n(sig.theta_n), abs=1e-12)


def test_lumped_resistance_linear(nmc, nmc_ocp):
    I = 2.0
    a = Simulator(nmc, nmc_ocp, SpatialGrid())
    b = Simulator(nmc.replace(R_l=2 * nmc.R_l), nmc_ocp, SpatialGrid())
    st0 = a.initial_state(0.5)
    dV = b.evaluate(st0, I).V - a.evaluate(st0, I).V
    assert dV == pytest.approx(-I * nmc.R_l, rel=1e-10)


def test_zero_current_fixed_point(nmc, nmc_ocp):
    res = simulate(nmc, SpatialGrid(), constant_current_profile(0.0, 3600.0, 60.0), nmc_ocp,
                   SimOptions(soc0=0.7))
    assert np.ptp(res.V) < 1e-12
    assert np.ptp(res.SOC_n) < 1e-12


def test_charge_discharge_soc_returns(nmc, nmc_ocp):
    t = np.arange(0.0, 3600.0 + 1, 10.0)
    I = np.where(t < 1800.0, -nmc.capacity / 2, nmc.capacity / 2)
    res = simulate(nmc, SpatialGrid(), TimeSeries({"t": t, "I": I}), nmc_ocp,
                   SimOptions(soc0=0.4))
    # the current at sample k acts over [t_k, t_k+1), so the state after the last
    # interval is the one to compare
    fin = res.final_state
    sim = Simulator(nmc, nmc_ocp, SpatialGrid())
    assert sim.evaluate(fin, 0.0).SOC_n == pytest.approx(res.SOC_n[0], abs=1e-6)


def test_cutoff_stops_run(nmc, nmc_ocp):
    res = simulate(nmc, SpatialGrid(), constant_current_profile(nmc.capacity, 7200.0, 10.0),
                   nmc_ocp, SimOptions(v_min=3.0))
    assert res.status == "cutoff"
    assert res.t[-1] < 3600.0 + 1


def test_run_is_deterministic(nmc, nmc_ocp):
    prof = constant_current_profile(nmc.capacity, 600.0, 10.0)
    a = simulate(nmc, SpatialGrid(), prof, nmc_ocp)
    b = simulate(nmc, SpatialGrid(), prof, nmc_ocp)
    np.testing.assert_array_equal(a.V, b.V)


def test_ocv_at_full_charge_is_plausible(nmc, nmc_ocp):
    v = nmc_ocp.U_p(nmc.theta_p_100) - nmc_ocp.U_n(nmc.theta_n_100)
    assert 4.0 < v < 4.3
    assert math.isfinite(v)
