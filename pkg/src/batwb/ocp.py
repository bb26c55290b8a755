"""Open-circuit potential tables and lookup tables."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError, DomainError, ExtrapolationWarning


@dataclass(frozen=True)
class OCPTable:
    """Piecewise-linear open-circuit potential vs stoichiometry."""

    theta: np.ndarray
    volts: np.ndarray
    name: str = ""

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        volts = np.asarray(self.volts, dtype=float)
        if theta.ndim != 1 or theta.shape != volts.shape:
            raise DataError("OCP table needs two equal-length 1-D columns")
        if theta.size < 2:
            raise DataError("OCP table needs at least 2 points")
        if not np.all(np.diff(theta) > 0):
            raise DataError("OCP breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(volts))):
            raise DataError("OCP table contains non-finite values")
        theta.setflags(write=False)
        volts.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "volts", volts)
        object.__setattr__(self, "_lo", float(theta[0]))
        object.__setattr__(self, "_hi", float(theta[-1]))

    def __call__(self, x):
        return np.interp(x, self.theta, self.volts)

    def value(self, x: float) -> float:
        """Scalar lookup; linear extrapolation is not performed (end values hold)."""
        return float(np.interp(x, self.theta, self.volts))

    def in_domain(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all((x >= self._lo) & (x <= self._hi)))

    def checked(self, x):
        """Evaluate, warning when ``x`` leaves the breakpoint domain."""
        if not self.in_domain(x):
            warnings.warn(
                f"OCP table {self.name or '?'} evaluated outside "
                f"[{self._lo}, {self._hi}]",
                ExtrapolationWarning,
                stacklevel=2,
            )
        return self(x)

    @property
    def domain(self):
        return self._lo, self._hi

    def inverse(self, v: float) -> float:
        """Stoichiometry at which the table equals ``v`` (strictly monotone tables)."""
        d = np.diff(self.volts)
        if np.all(d < 0):
            th, vv = self.theta[::-1], self.volts[::-1]
        elif np.all(d > 0):
            th, vv = self.theta, self.volts
        else:
            raise DomainError("inverse requires a strictly monotone OCP table")
        if not vv[0] <= v <= vv[-1]:
            raise DomainError(f"{v} V outside OCP range [{vv[0]}, {vv[-1]}]")
        k = int(np.searchsorted(vv, v))
        if k == 0:
            return float(th[0])
        v0, v1 = vv[k - 1], vv[k]
        return float(th[k - 1] + (v - v0) * (th[k] - th[k - 1]) / (v1 - v0))

    @classmethod
    def from_csv(cls, path, name=None) -> "OCPTable":
        path = Path(path)
        rows = _read_numeric_rows(path)
        if not rows:
            raise DataError(f"{path}: empty OCP file")
        arr = np.array(rows, dtype=float)
        if arr.shape[1] != 2:
            raise DataError(f"{path}: expected 2 columns (stoichiometry, volts)")
        order = np.argsort(arr[:, 0], kind="stable")
        return cls(arr[order, 0], arr[order, 1], name=name or path.stem)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stoichiometry", "volts"])
            for a, b in zip(self.theta, self.volts):
                w.writerow([repr(float(a)), repr(float(b))])


def _read_numeric_rows(path):
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                if rows:
                    raise DataError(f"{path}: non-numeric row {rec!r}")
                # header
    return rows


@dataclass(frozen=True)
class OCPSet:
    """Electrode potentials for one cell.

    When both LFP branches are given, the positive potential used by the
    model is their average.
    """

    positive: OCPTable | None
    negative: OCPTable
    positive_charge: OCPTable | None = None
    positive_discharge: OCPTable | None = None

    def __post_init__(self):
        if self.positive is None and not self.has_branches:
            raise DataError("positive OCP missing")
        if (self.positive_charge is None) != (self.positive_discharge is None):
            raise DataError("both positive OCP branches are required")

    @property
    def has_branches(self) -> bool:
        return self.positive_charge is not None

    def U_p(self, theta: float) -> float:
        if self.has_branches:
            return 0.5 * (self.positive_charge.value(theta) + self.positive_discharge.value(theta))
        return self.positive.value(theta)

    def U_n(self, theta: float) -> float:
        return self.negative.value(theta)

    def positive_in_domain(self, theta: float) -> bool:
        if self.has_branches:
            return self.positive_charge.in_domain(theta) and self.positive_discharge.in_domain(theta)
        return self.positive.in_domain(theta)

    def positive_average_table(self) -> OCPTable:
        """Positive potential as a single table (branch average on the union grid)."""
        if not self.has_branches:
            return self.positive
        grid = np.union1d(self.positive_charge.theta, self.positive_discharge.theta)
        return OCPTable(grid, 0.5 * (self.positive_charge(grid) + self.positive_discharge(grid)),
                        name="positive_avg")


class ResistanceTable:
    """Bilinear lookup of a resistance over (SOC, current); clamped at the edges."""

    def __init__(self, soc, current, values):
        self.soc = np.asarray(soc, dtype=float)
        self.current = np.asarray(current, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (self.soc.size, self.current.size):
            raise DataError("resistance table shape must be (len(soc), len(current))")
        if self.soc.size < 2 or self.current.size < 2:
            raise DataError("resistance table needs at least 2 points per axis")
        if not (np.all(np.diff(self.soc) > 0) and np.all(np.diff(self.current) > 0)):
            raise DataError("resistance table axes must be strictly increasing")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise DataError("resistance values must be finite and nonnegative")

    def __call__(self, soc: float, current: float) -> float:
        i, wx = _bracket(self.soc, soc)
        j, wy = _bracket(self.current, current)
        v = self.values
        return float(
            (1 - wx) * (1 - wy) * v[i, j]
            + wx * (1 - wy) * v[i + 1, j]
            + (1 - wx) * wy * v[i, j + 1]
            + wx * wy * v[i + 1, j + 1]
        )

    def to_dict(self):
        return {"soc": self.soc.tolist(), "current": self.current.tolist(),
                "values": self.values.tolist()}


def _bracket(axis, x):
    x = min(max(x, axis[0]), axis[-1])
    k = int(np.searchsorted(axis, x, side="right")) - 1
    k = min(max(k, 0), axis.size - 2)
    w = (x - axis[k]) / (axis[k + 1] - axis[k])
    return k, w


# --- reference curves used to build the shipped tables -------------------

def nmc_ocp(x):
    """NMC811 positive potential (literature fit, valid ~0.25-0.95)."""
    x = np.asarray(x, dtype=float)
    return (-0.8090 * x + 4.4875 - 0.0428 * np.tanh(18.5138 * (x - 0.5542))
            - 17.7326 * np.tanh(15.7890 * (x - 0.3117))
            + 17.5842 * np.tanh(15.9308 * (x - 0.3120)))


def graphite_ocp(x):
    """Graphite negative potential (literature fit)."""
    x = np.asarray(x, dtype=float)
    return (1.9793 * np.exp(-39.3631 * x) + 0.2482
            - 0.0909 * np.tanh(29.8538 * (x - 0.1234))
            - 0.04478 * np.tanh(14.9159 * (x - 0.2769))
            - 0.0205 * np.tanh(30.4444 * (x - 0.6103)))


def lfp_ocp_mid(x):
    """Synthetic LFP plateau potential with steep ends."""
    x = np.asarray(x, dtype=float)
    return (3.42 - 0.03 * (x - 0.5) + 0.5 * np.exp(-30.0 * x)
            - 0.8 * np.exp(-30.0 * (1.0 - x)))


def lfp_hysteresis_half_gap(x, h=0.015):
    """Half of the charge/discharge gap; vanishes at the ends."""
    x = np.asarray(x, dtype=float)
    return h * np.clip(4.0 * x * (1.0 - x) * 1.6, 0.0, 1.0)


def _table(name, x, v):
    return OCPTable(x, v, name=name)


def reference_tables():
    """Builtin tables computed from the reference curves."""
    x = np.linspace(0.0, 1.0, 401)
    xs = np.linspace(0.001, 1.0, 400)
    return {
        "nmc": _table("nmc", x, nmc_ocp(x)),
        "graphite": _table("graphite", xs, graphite_ocp(xs)),
        "lfp_charge": _table("lfp_charge", x, lfp_ocp_mid(x) + lfp_hysteresis_half_gap(x)),
        "lfp_discharge": _table("lfp_discharge", x, lfp_ocp_mid(x) - lfp_hysteresis_half_gap(x)),
    }


def builtin_table(name: str) -> OCPTable:
    """Load a shipped OCP table (``nmc``, ``graphite``, ``lfp_charge``, ``lfp_discharge``)."""
    ref = resources.files("batwb") / "data" / f"ocp_{name}.csv"
    if not ref.is_file():
        raise DataError(f"no builtin OCP table {name!r}")
    with resources.as_file(ref) as p:
        return OCPTable.from_csv(p, name=name)


def load_table(spec: str, base_dir=None) -> OCPTable:
    """Resolve ``builtin:<name>`` or a CSV path."""
    if spec.startswith("builtin:"):
        return builtin_table(spec.split(":", 1)[1])
    p = Path(spec)
    if base_dir is not None and not p.is_absolute():
        p = Path(base_dir) / p
    if not p.is_file():
        raise DataError(f"OCP file not found: {p}")
    return OCPTable.from_csv(p)


def default_ocp(chemistry: str = "nmc") -> OCPSet:
    if chemistry == "nmc":
        return OCPSet(positive=builtin_table("nmc"), negative=builtin_table("graphite"))
    if chemistry == "lfp":
        return OCPSet(positive=None, negative=builtin_table("graphite"),
                      positive_charge=builtin_table("lfp_charge"),
                      positive_discharge=builtin_table("lfp_discharge"))
    raise DataError(f"unknown chemistry {chemistry!r}")


