"""State-of-health estimation from partial charge curves.

Features come from fixed-length windows of the constant-current voltage
and the constant-voltage current. Elapsed time only orders samples inside
a window and never enters the feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .errors import DataError, DomainError, NoChargeEventError, WindowTooShortError
from .timeseries import TimeSeries

FEATURE_SCHEMA_VERSION = 1
_STATS = ("mean", "slope", "curvature", "iqr", "delta", "integral")
FEATURE_NAMES = tuple([f"cc_V_{s}" for s in _STATS] + [f"cv_I_{s}" for s in _STATS])


@dataclass
class SegmentOptions:
    cc_window: tuple = (0.0, 1200.0)   # (offset from phase start, length) in s
    cv_window: tuple = (0.0, 300.0)
    i_min: float = 1e-3                # |I| below this counts as rest [A]
    cc_rel_tol: float = 0.02           # CC: |I - I_cc| <= tol * |I_cc|
    cv_v_tol: float = 5e-3             # CV: |V - V_cv| <= tol [V]


@dataclass
class ChargeSegment:
    cc_t: np.ndarray
    cc_V: np.ndarray
    cv_t: np.ndarray
    cv_I: np.ndarray
    switch_index: int | None
    cv_empty: bool
    meta: dict = field(default_factory=dict)


def segment_charge(record: TimeSeries, opts: SegmentOptions | None = None,
                   meta: dict | None = None) -> ChargeSegment:
    """Locate the first charge event and crop its CC and CV windows.

    Charging is ``I < 0``. The CC phase holds the current of its first
    sample; the CV phase follows while the voltage stays at the CC end value
    and current still flows. ``switch_index`` is the first CV sample.
    """
    opts = opts or SegmentOptions()
    t = np.asarray(record["t"], float)
    I = np.asarray(record["I"], float)
    V = np.asarray(record["V"], float)
    charging = I < -opts.i_min
    if not charging.any():
        raise NoChargeEventError("record contains no charging samples")
    k0 = int(np.argmax(charging))
    I_cc = I[k0]
    k = k0
    n = t.size
    while k + 1 < n and abs(I[k + 1] - I_cc) <= opts.cc_rel_tol * abs(I_cc):
        k += 1
    cc_end = k  # last CC sample
    V_cv = V[cc_end]
    j = cc_end + 1
    while j < n and I[j] < -opts.i_min and abs(V[j] - V_cv) <= opts.cv_v_tol:
        j += 1
    has_cv = j > cc_end + 1
    cc_t, cc_V = _crop(t[k0:cc_end + 1], V[k0:cc_end + 1], opts.cc_window, "CC")
    if has_cv:
        cv_t, cv_I = _crop(t[cc_end + 1:j], np.abs(I[cc_end + 1:j]), opts.cv_window, "CV")
    else:
        cv_t, cv_I = np.empty(0), np.empty(0)
    return ChargeSegment(cc_t, cc_V, cv_t, cv_I, cc_end + 1 if has_cv else None,
                         not has_cv, dict(meta or {}))


def _crop(t, y, window, label):
    off, length = window
    if length <= 0 or off < 0:
        raise DomainError(f"{label} window must have offset >= 0 and length > 0")
    rel = t - t[0]
    if rel[-1] < off + length - 1e-9:
        raise WindowTooShortError(
            f"{label} phase lasts {rel[-1]:.6g} s, window needs {off + length:.6g} s")
    keep = (rel >= off - 1e-9) & (rel <= off + length + 1e-9)
    if keep.sum() < 3:
        raise WindowTooShortError(f"{label} window holds fewer than 3 samples")
    return rel[keep] - off, y[keep]


def window_stats(t, y) -> np.ndarray:
    """Mean, LS slope, mean second derivative, IQR, delta, trapezoid integral."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    if y.size == 0:
        return np.full(6, np.nan)
    mean = float(y.mean())
    tc = t - t.mean()
    den = float(tc @ tc)
    slope = float(tc @ (y - mean) / den) if den > 0 else 0.0
    if y.size >= 3:
        h = np.diff(t)
        # second divided differences on a possibly uneven grid
        d2 = 2.0 * ((y[2:] - y[1:-1]) / h[1:] - (y[1:-1] - y[:-2]) / h[:-1]) / (h[1:] + h[:-1])
        curv = float(d2.mean())
    else:
        curv = 0.0
    q75, q25 = np.percentile(y, [75, 25])
    integral = float(trapezoid(y, t))
    return np.array([mean, slope, curv, q75 - q25, y[-1] - y[0], integral])


@dataclass
class FeatureVector:
    values: np.ndarray
    names: tuple = FEATURE_NAMES

    @property
    def missing(self) -> np.ndarray:
        return ~np.isfinite(self.values)


def extract_features(segment: ChargeSegment) -> FeatureVector:
    """12 features: six statistics of the CC voltage and of the CV current windows."""
    v = np.concatenate((window_stats(segment.cc_t, segment.cc_V),
                        window_stats(segment.cv_t, segment.cv_I)))
    return FeatureVector(v)


# --------------------------------------------------------------------------
# ranking and metrics

def mrmr_rank(F, y, k: int | None = None) -> list:
    """Greedy minimum-redundancy maximum-relevance order (|Pearson| throughout)."""
    F = np.asarray(F, float)
    y = np.asarray(y, float).ravel()
    if F.ndim != 2 or F.shape[1] < 2:
        raise DataError("need a 2-D matrix with at least 2 candidate features")
    if F.shape[0] != y.size:
        raise DataError("feature matrix and target lengths differ")
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(y))):
        raise DataError("missing values in features or target")
    sd = F.std(0)
    if np.any(sd == 0):
        bad = np.flatnonzero(sd == 0).tolist()
        raise DataError(f"zero-variance feature column(s): {bad}")
    if y.std() == 0:
        raise DataError("zero-variance target")
    p = F.shape[1]
    k = p if k is None else int(k)
    if not 1 <= k <= p:
        raise DomainError("k must lie in [1, n_features]")
    Z = (F - F.mean(0)) / sd
    zy = (y - y.mean()) / y.std()
    n = y.size
    rel = np.abs(Z.T @ zy) / n
    red = np.abs(Z.T @ Z) / n
    chosen = [int(np.argmax(rel))]
    remaining = [j for j in range(p) if j != chosen[0]]
    while len(chosen) < k:
        scores = [rel[j] - red[j, chosen].mean() for j in remaining]
        j = remaining[int(np.argmax(scores))]
        chosen.append(j)
        remaining.remove(j)
    return chosen


def soh(Q, Q_nom: float):
    """State of health in percent of nominal capacity."""
    if not Q_nom > 0:
        raise DomainError("Q_nom must be > 0")
    return np.asarray(Q, float) * (100.0 / Q_nom) if np.ndim(Q) else float(Q) * 100.0 / Q_nom


def error_metrics(y, yhat):
    """``(RMSE, RMSPE, MAPE)``; percentages in %, MAPE is the maximum absolute percentage error."""
    y = np.asarray(y, float).ravel()
    yhat = np.asarray(yhat, float).ravel()
    if y.shape != yhat.shape or y.size == 0:
        raise DataError("y and yhat must be non-empty and of equal length")
    if np.any(y == 0):
        raise DomainError("percentage metrics undefined for zero targets")
    e = yhat - y
    rel = e / y
    return (float(np.sqrt(np.mean(e * e))), float(100.0 * np.sqrt(np.mean(rel * rel))),
            float(100.0 * np.max(np.abs(rel))))


# --------------------------------------------------------------------------
# synthetic cycling data

def degradation_curve(cycles, q0: float = 1.0, fade: float = 8e-5, knee: float = 800.0,
                      knee_depth: float = 0.02, knee_width: float = 120.0):
    """Capacity vs cycle: linear fade plus an exponential knee."""
    c = np.asarray(cycles, float)
    return q0 * (1.0 - fade * c - knee_depth * np.exp((c - knee) / knee_width))


def noisy_degradation(cycles, rng, noise: float = 0.01, spike_rate: float = 0.08,
                      spike_scale: float = 4.0, **curve_kw):
    """Degradation curve with Gaussian noise plus sparse capacity-recovery spikes."""
    c = np.asarray(cycles, float)
    y = degradation_curve(c, **curve_kw)
    e = rng.normal(0.0, noise, c.size)
    e += np.where(rng.random(c.size) < spike_rate, rng.normal(0.0, spike_scale * noise, c.size),
                  0.0)
    return y + e


def synthetic_cccv(capacity_Ah: float, soh_frac: float, dt: float = 10.0, I_cc_C: float = 0.5,
                   v_max: float = 4.2, rng=None, noise_V: float = 0.0) -> TimeSeries:
    """CC-CV charge of an equivalent-circuit cell whose capacity is ``soh_frac * capacity_Ah``.

    Aging shrinks capacity and raises resistance, which shortens the CC
    phase and slows the CV decay.
    """
    Q = capacity_Ah * soh_frac
    R0 = 0.05 * (1.0 + 2.5 * (1.0 - soh_frac))
    I_cc = -I_cc_C * capacity_Ah

    def ocv(s):
        return 3.4 + 0.6 * s + 0.12 * np.tanh(8 * (s - 0.1)) - 0.12

    t, I, V = [0.0], [0.0], [float(ocv(0.05))]
    s = 0.05
    k = 0
    # rest, then CC until the voltage limit
    for _ in range(3):
        k += 1
        t.append(k * dt)
        I.append(0.0)
        V.append(float(ocv(s)))
    while True:
        v = ocv(s) - I_cc * R0
        if v >= v_max:
            break
        k += 1
        s -= I_cc * dt / (3600.0 * Q)
        t.append(k * dt)
        I.append(I_cc)
        V.append(float(v))
    # CV: current relaxes as the cell fills
    i_cut = 0.02 * capacity_Ah
    while True:
        cur = -(v_max - ocv(s)) / R0
        if -cur < i_cut:
            break
        k += 1
        s -= cur * dt / (3600.0 * Q)
        t.append(k * dt)
        I.append(float(cur))
        V.append(v_max)
    for _ in range(3):
        k += 1
        t.append(k * dt)
        I.append(0.0)
        V.append(float(ocv(s)))
    V = np.array(V)
    if rng is not None and noise_V > 0:
        V = V + rng.normal(0.0, noise_V, V.size)
    return TimeSeries({"t": np.array(t), "I": np.array(I), "V": V})


def synthetic_fleet(n_cycles: int = 60, capacity_Ah: float = 0.74, seed: int = 0,
                    noise_V: float = 1e-3, soh_noise: float = 0.003, dt: float = 10.0):
    """Charge records and measured capacities across an aging trajectory."""
    rng = np.random.default_rng(seed)
    cycles = np.linspace(0, 1000, n_cycles)
    frac = degradation_curve(cycles, knee_depth=0.05) + rng.normal(0.0, soh_noise, n_cycles)
    records = [synthetic_cccv(capacity_Ah, f, dt=dt, rng=rng, noise_V=noise_V) for f in frac]
    return records, frac * capacity_Ah, cycles


def build_feature_matrix(records, opts: SegmentOptions | None = None):
    rows = [extract_features(segment_charge(r, opts)).values for r in records]
    return np.array(rows)
