"""Two-phase core-shell positive particle with a moving phase boundary.

The shell ``[r_p, R]`` is discretized with a fixed number of cell-centered
control volumes mapped onto the moving domain. The interface holds the
shell-phase concentration; lithium arriving at (or leaving) the interface
converts core volume into shell phase. Each step ends with a conservative
remap of the shell onto the new boundary position, so total particle
lithium changes only by the surface flux.

Orientation ``+1``: lithium-poor (alpha) core, lithium-rich (beta) shell, the
discharge configuration. ``-1``: beta core, alpha shell (charge).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BoundaryCollisionError, DegeneratePhaseError, DomainError, SaturationError


@dataclass(frozen=True)
class CoreShellParameters:
    c_alpha_frac: float = 0.01   # alpha phase concentration / c_s_max_p
    c_beta_frac: float = 0.95
    n_shell: int = 20
    guard_frac: float = 0.02     # r_min / R_p

    def __post_init__(self):
        if not 0 <= self.c_alpha_frac < self.c_beta_frac <= 1:
            raise DomainError("need 0 <= c_alpha_frac < c_beta_frac <= 1")
        if self.n_shell < 3:
            raise DomainError("n_shell must be >= 3")
        if not 0 < self.guard_frac < 0.5:
            raise DomainError("guard_frac must lie in (0, 0.5)")

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class PhaseBoundaryState:
    r_p: float
    c_alpha: float
    c_beta: float
    shell: np.ndarray
    orientation: int  # +1 alpha core (discharge), -1 beta core (charge)
    R: float

    @property
    def c_core(self) -> float:
        return self.c_alpha if self.orientation > 0 else self.c_beta

    @property
    def c_shell(self) -> float:
        return self.c_beta if self.orientation > 0 else self.c_alpha

    def copy(self) -> "PhaseBoundaryState":
        return dataclasses.replace(self, shell=self.shell.copy())

    def edges(self) -> np.ndarray:
        n = self.shell.size
        return self.r_p + (self.R - self.r_p) * np.arange(n + 1) / n

    def volumes(self) -> np.ndarray:
        e = self.edges()
        return (e[1:] ** 3 - e[:-1] ** 3) / 3.0

    def total_lithium(self) -> float:
        """Particle lithium per steradian [mol] (core + shell)."""
        return self.c_core * self.r_p ** 3 / 3.0 + float(np.dot(self.volumes(), self.shell))

    def mean_concentration(self) -> float:
        return self.total_lithium() / (self.R ** 3 / 3.0)

    def surface_concentration(self, surface_gradient: float = 0.0) -> float:
        h = (self.R - self.r_p) / self.shell.size
        return float(self.shell[-1] + surface_gradient * 0.5 * h)


def boundary_velocity(grad_at_rp: float, D: float, sign: float,
                      c_alpha: float, c_beta: float) -> float:
    """Phase-boundary velocity dr_p/dt from the interface flux balance.

    ``sign`` is the current sign (+1 discharge, -1 charge), which fixes which
    phase forms the core.
    """
    if c_alpha == c_beta:
        raise DegeneratePhaseError("c_alpha equals c_beta")
    s = 0.0 if sign == 0 else (1.0 if sign > 0 else -1.0)
    return s * D * grad_at_rp / (c_alpha - c_beta)


def _radius_for_core(N, c_core, c_shell, R):
    v = (N - c_shell * R ** 3 / 3.0) / (c_core - c_shell)
    return np.cbrt(3.0 * v) if v > 0 else 0.0


def initial_state(theta_bulk: float, c_max: float, R: float, params: CoreShellParameters,
                  orientation: int | None = None) -> PhaseBoundaryState:
    """Phase configuration holding ``theta_bulk * c_max`` with a uniform shell.

    When ``orientation`` is None, the discharge configuration is preferred if
    its boundary lies inside the guards.
    """
    c_a, c_b = params.c_alpha_frac * c_max, params.c_beta_frac * c_max
    N = theta_bulk * c_max * R ** 3 / 3.0
    lo, hi = params.guard_frac * R, (1 - params.guard_frac) * R
    options = [orientation] if orientation is not None else [1, -1]
    for o in options:
        core, shell = (c_a, c_b) if o > 0 else (c_b, c_a)
        r = _radius_for_core(N, core, shell, R)
        if lo <= r <= hi:
            return PhaseBoundaryState(r, c_a, c_b, np.full(params.n_shell, shell), o, R)
    raise BoundaryCollisionError(
        f"stoichiometry {theta_bulk:.4g} cannot be represented with the boundary inside the guards")


def reinitialize(state: PhaseBoundaryState, orientation: int,
                 params: CoreShellParameters) -> PhaseBoundaryState:
    """Swap phase roles after a current reversal.

    The former shell phase becomes the new core; a fresh uniform shell of
    the other phase is placed outside it. The boundary is positioned so that
    particle lithium is unchanged.
    """
    N = state.total_lithium()
    new = PhaseBoundaryState(0.0, state.c_alpha, state.c_beta, state.shell.copy(), orientation, state.R)
    r = _radius_for_core(N, new.c_core, new.c_shell, state.R)
    _check_guard(r, state.R, params)
    new.r_p = r
    new.shell = np.full(state.shell.size, new.c_shell)
    return new


def _check_guard(r, R, params):
    lo, hi = params.guard_frac * R, (1 - params.guard_frac) * R
    if not lo <= r <= hi:
        raise BoundaryCollisionError(f"phase boundary at r/R = {r / R:.4f} crossed a guard")


def coreshell_step(state: PhaseBoundaryState, surface_gradient: float, D: float, dt: float,
                   params: CoreShellParameters, I: float = 0.0, c_max: float | None = None
                   ) -> PhaseBoundaryState:
    """Advance shell diffusion and the phase boundary over ``dt``.

    ``surface_gradient`` is dc/dr at ``r = R`` (positive drives lithium in).
    A nonzero ``I`` whose sign disagrees with the orientation triggers
    :func:`reinitialize` before the step.
    """
    if dt <= 0:
        raise DomainError("dt must be > 0")
    if state.c_alpha == state.c_beta:
        raise DegeneratePhaseError("c_alpha equals c_beta")
    if I != 0.0:
        want = 1 if I > 0 else -1
        if want != state.orientation:
            state = reinitialize(state, want, params)

    R, n = state.R, state.shell.size
    r_p = state.r_p
    h = (R - r_p) / n
    e = state.edges()
    vol = (e[1:] ** 3 - e[:-1] ** 3) / 3.0
    cond = D * e[1:-1] ** 2 / h
    src = np.zeros(n)
    src[-1] = R * R * D * surface_gradient
    g_left = D * r_p * r_p / (0.5 * h)
    c_s = state.c_shell
    shell = kernels.implicit_diffusion(state.shell, vol, cond, src, dt, g_left, c_s)
    if not np.all(np.isfinite(shell)):
        raise SaturationError("non-finite shell concentration")

    # lithium absorbed by the interface over the step
    q = g_left * (shell[0] - c_s) * dt
    v_old = r_p ** 3 / 3.0
    v_new = v_old - q / (c_s - state.c_core)
    r_new = float(np.cbrt(3.0 * v_new)) if v_new > 0 else 0.0
    _check_guard(r_new, R, params)

    shell_content = float(np.dot(vol, shell)) + c_s * (v_old - v_new)
    new_edges = r_new + (R - r_new) * np.arange(n + 1) / n
    new_shell = _remap(e, shell, v_new, v_old, c_s, new_edges, shell_content)

    if c_max is not None:
        tol = 1e-9 * c_max
        if new_shell.min() < -tol or new_shell.max() > c_max + tol:
            raise SaturationError("shell concentration left [0, c_max]")
    return PhaseBoundaryState(r_new, state.c_alpha, state.c_beta, new_shell, state.orientation, R)


def _remap(old_edges, values, v_new, v_old, c_fill, new_edges, target_content):
    """Conservative piecewise-constant remap in the volume coordinate r^3/3."""
    vo = old_edges ** 3 / 3.0
    # cumulative content at the old edges, measured from v_old
    cum = np.concatenate(([0.0], np.cumsum(values * np.diff(vo))))
    vn = new_edges ** 3 / 3.0

    def content_upto(v):
        v = np.asarray(v, dtype=float)
        out = np.interp(v, vo, cum)
        below = v < vo[0]
        # filled conversion segment [v_new, v_old) has density c_fill
        out = np.where(below, -(vo[0] - v) * c_fill, out)
        return out

    cm = content_upto(vn)
    amounts = np.diff(cm)
    amounts[0] += target_content - amounts.sum()
    return amounts / np.diff(vn)


def average_positive_ocp(theta_p, ocp) -> float:
    """Mean of the charge and discharge positive-electrode branches."""
    ch, dis = ocp.positive_charge, ocp.positive_discharge
    if ch is None or dis is None:
        raise DomainError("average_positive_ocp needs both positive OCP branches")
    return 0.5 * (ch.checked(theta_p) + dis.checked(theta_p))
