"""Cell parameters, spatial grid, and builtin parameter presets."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields

from .constants import F, R_GAS, T_REF
from .errors import DomainError

_POSITIVE = (
    "A_cell", "L_p", "L_s", "L_n", "R_p", "R_n", "D_s_p_ref", "D_s_n_ref",
    "D_e", "kappa_e", "k_p", "k_n", "c_s_max_p", "c_s_max_n", "c_e_init",
)
_OPEN_UNIT = ("eps_p", "eps_s", "eps_n", "nu_p", "nu_n", "t_plus")


@dataclass(frozen=True)
class CellParameters:
    """Physical, geometric and transport description of one cell (SI units).

    Current convention throughout the package: ``I > 0`` discharges the cell.
    """

    A_cell: float
    L_p: float
    L_s: float
    L_n: float
    R_p: float
    R_n: float
    eps_p: float
    eps_s: float
    eps_n: float
    nu_p: float
    nu_n: float
    D_s_p_ref: float
    D_s_n_ref: float
    D_e: float
    kappa_e: float
    t_plus: float
    k_p: float
    k_n: float
    c_s_max_p: float
    c_s_max_n: float
    c_e_init: float
    theta_p_0: float
    theta_p_100: float
    theta_n_0: float
    theta_n_100: float
    R_l: float = 0.0
    R_el: float = 0.0
    brugg: float = 1.5
    v_td: float = 1.0
    Ea_D_s_p: float = 0.0
    Ea_D_s_n: float = 0.0
    # lumped L_SEI/kappa_SEI of a pre-existing film [m^2/S]
    sei_lumped: float = 0.0
    # optional electrolyte property polynomials in c [mol/m^3], numpy.polyval order
    D_e_poly: tuple | None = None
    kappa_poly: tuple | None = None
    Ea_D_e: float = 0.0
    Ea_kappa: float = 0.0
    i0_floor: float = 1e-8

    def __post_init__(self):
        for name in _POSITIVE:
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and > 0 (got {v})")
        for name in _OPEN_UNIT:
            v = getattr(self, name)
            if not 0 < v < 1:
                raise DomainError(f"{name} must lie in (0, 1) (got {v})")
        if not 0 <= self.theta_n_0 < self.theta_n_100 <= 1:
            raise DomainError("need 0 <= theta_n_0 < theta_n_100 <= 1")
        if not 0 <= self.theta_p_100 < self.theta_p_0 <= 1:
            raise DomainError("need 0 <= theta_p_100 < theta_p_0 <= 1")
        for name in ("R_l", "R_el", "sei_lumped", "i0_floor"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")
        if self.brugg <= 0 or self.v_td <= 0:
            raise DomainError("brugg and v_td must be > 0")
        for name in ("D_e_poly", "kappa_poly"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(float(c) for c in v))

    # derived quantities -------------------------------------------------

    @property
    def a_p(self) -> float:
        """Fresh specific surface area of the positive electrode [1/m]."""
        return 3.0 * self.nu_p / self.R_p

    @property
    def a_n(self) -> float:
        return 3.0 * self.nu_n / self.R_n

    @property
    def L_total(self) -> float:
        return self.L_p + self.L_s + self.L_n

    def electrode_capacity(self, electrode: str) -> float:
        """Full-lithiation capacity of one electrode [Ah]."""
        if electrode == "p":
            return F * self.nu_p * self.A_cell * self.L_p * self.c_s_max_p / 3600.0
        return F * self.nu_n * self.A_cell * self.L_n * self.c_s_max_n / 3600.0

    @property
    def capacity(self) -> float:
        """Nominal cell capacity from the negative-electrode window [Ah]."""
        return self.electrode_capacity("n") * (self.theta_n_100 - self.theta_n_0)

    @property
    def capacity_p(self) -> float:
        return self.electrode_capacity("p") * (self.theta_p_0 - self.theta_p_100)

    def D_s(self, electrode: str, T: float) -> float:
        """Arrhenius-scaled solid diffusivity."""
        if electrode == "p":
            ref, ea = self.D_s_p_ref, self.Ea_D_s_p
        else:
            ref, ea = self.D_s_n_ref, self.Ea_D_s_n
        if ea == 0.0 or T == T_REF:
            return ref
        return ref * math.exp(-ea / R_GAS * (1.0 / T - 1.0 / T_REF))

    def D_e_bulk(self, c: float, T: float) -> float:
        d = self.D_e if self.D_e_poly is None else _polyval(self.D_e_poly, c)
        if self.Ea_D_e:
            d *= math.exp(-self.Ea_D_e / R_GAS * (1.0 / T - 1.0 / T_REF))
        return d

    def kappa_bulk(self, c: float, T: float) -> float:
        k = self.kappa_e if self.kappa_poly is None else _polyval(self.kappa_poly, c)
        if self.Ea_kappa:
            k *= math.exp(-self.Ea_kappa / R_GAS * (1.0 / T - 1.0 / T_REF))
        return k

    def replace(self, **changes) -> "CellParameters":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "CellParameters":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise DomainError(f"unknown cell parameter(s): {sorted(unknown)}")
        return cls(**d)


def _polyval(coeffs, x):
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def effective_transport(eps: float, brugg: float, bulk: float) -> float:
    """Bruggeman-corrected effective diffusivity or conductivity."""
    if not (0 < eps <= 1):
        raise DomainError(f"porosity must lie in (0, 1] (got {eps})")
    if not bulk > 0:
        raise DomainError(f"bulk transport property must be > 0 (got {bulk})")
    return eps ** brugg * bulk


@dataclass(frozen=True)
class SpatialGrid:
    """Node counts; positions are uniform within each region."""

    n_r: int = 20
    n_x_p: int = 8
    n_x_s: int = 5
    n_x_n: int = 8
    n_r_p: int | None = None  # optional override per particle
    n_r_n: int | None = None

    def __post_init__(self):
        for name in ("n_r", "n_x_p", "n_x_s", "n_x_n"):
            if int(getattr(self, name)) < 3:
                raise DomainError(f"{name} must be >= 3")
        for name in ("n_r_p", "n_r_n"):
            v = getattr(self, name)
            if v is not None and int(v) < 3:
                raise DomainError(f"{name} must be >= 3")

    @property
    def nodes_r_p(self) -> int:
        return self.n_r_p or self.n_r

    @property
    def nodes_r_n(self) -> int:
        return self.n_r_n or self.n_r

    @property
    def n_x(self) -> int:
        """Total electrolyte nodes (interface nodes shared)."""
        return self.n_x_p + self.n_x_s + self.n_x_n - 2

    @classmethod
    def uniform(cls, n: int) -> "SpatialGrid":
        return cls(n_r=n, n_x_p=n, n_x_s=n, n_x_n=n)


def _nmc_graphite():
    return CellParameters(
        A_cell=0.1027, L_p=75.6e-6, L_s=12e-6, L_n=85.2e-6,
        R_p=5.22e-6, R_n=5.86e-6, eps_p=0.335, eps_s=0.47, eps_n=0.25,
        nu_p=0.665, nu_n=0.75, D_s_p_ref=4e-15, D_s_n_ref=3.3e-14,
        D_e=1.7694e-10, kappa_e=0.9487, t_plus=0.2594,
        k_p=3.54e-11, k_n=6.7e-12, c_s_max_p=63104.0, c_s_max_n=33133.0,
        c_e_init=1000.0, theta_p_0=0.8490, theta_p_100=0.2661,
        theta_n_0=0.0279, theta_n_100=0.9014, R_l=0.015,
        Ea_D_s_p=2.5e4, Ea_D_s_n=3.0e4,
    )


def _lfp_graphite():
    return CellParameters(
        A_cell=1.0, L_p=90e-6, L_s=20e-6, L_n=60e-6,
        R_p=5e-8, R_n=5e-6, eps_p=0.3, eps_s=0.45, eps_n=0.3,
        nu_p=0.5, nu_n=0.6, D_s_p_ref=5e-17, D_s_n_ref=3e-14,
        D_e=2e-10, kappa_e=1.0, t_plus=0.36,
        k_p=1e-12, k_n=5e-12, c_s_max_p=22806.0, c_s_max_n=31000.0,
        c_e_init=1200.0, theta_p_0=0.878, theta_p_100=0.03,
        theta_n_0=0.02, theta_n_100=0.80, R_l=0.002,
    )


PRESETS = {"nmc_graphite": _nmc_graphite, "lfp_graphite": _lfp_graphite}


def preset(name: str, **overrides) -> CellParameters:
    """Builtin parameter set, optionally overridden field by field."""
    try:
        base = PRESETS[name]()
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return base.replace(**overrides) if overrides else base


def balance_positive_window(params: CellParameters) -> CellParameters:
    """Set ``theta_p_0`` so both electrodes cycle the same charge."""
    width = params.capacity / params.electrode_capacity("p")
    return params.replace(theta_p_0=params.theta_p_100 + width)
