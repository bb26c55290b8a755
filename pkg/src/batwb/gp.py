"""Gaussian process regression and bagged GP ensembles.

Squared-exponential kernel with one length scale per input dimension.
Hyperparameters maximize the log marginal likelihood (multistart L-BFGS-B
in log space, analytic gradient).
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .errors import DataError, DomainError, NotPositiveDefiniteError

ARTIFACT_VERSION = 1
_JITTER_START = 1e-10
_JITTER_CAP = 1e-2


@dataclass
class GPOptions:
    n_restarts: int = 4
    seed: int = 0
    normalize_y: bool = True
    optimize: bool = True
    length_scale: float | np.ndarray = 1.0   # initial (or fixed) values
    signal_var: float = 1.0
    noise_var: float = 1e-2
    length_bounds: tuple = (1e-2, 1e3)
    signal_bounds: tuple = (1e-3, 1e3)
    noise_bounds: tuple = (1e-8, 1.0)


@dataclass
class GPModel:
    X: np.ndarray
    y: np.ndarray              # targets after centering/scaling
    length_scale: np.ndarray
    signal_var: float
    noise_var: float
    y_mean: float
    y_std: float
    L: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    jitter: float = 0.0
    log_ml: float = float("nan")
    weights: np.ndarray | None = None

    @property
    def dim(self):
        return self.X.shape[1]


def se_kernel(A, B, length_scale, signal_var):
    A = np.asarray(A, float) / length_scale
    B = np.asarray(B, float) / length_scale
    d2 = (np.sum(A * A, 1)[:, None] + np.sum(B * B, 1)[None, :] - 2.0 * A @ B.T)
    np.maximum(d2, 0.0, out=d2)
    return signal_var * np.exp(-0.5 * d2)


def _chol(K):
    """Cholesky factor with jitter escalation; returns ``(L, jitter)``."""
    try:
        return np.linalg.cholesky(K), 0.0
    except np.linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(K))) or 1.0
    jit = _JITTER_START
    n = K.shape[0]
    while jit <= _JITTER_CAP:
        try:
            return np.linalg.cholesky(K + jit * scale * np.eye(n)), jit * scale
        except np.linalg.LinAlgError:
            jit *= 10.0
    raise NotPositiveDefiniteError("covariance not positive definite after jitter escalation")


def _neg_log_ml(logp, X, y, inv_w=None, with_grad=True):
    d = X.shape[1]
    ell = np.exp(logp[:d])
    sf2 = np.exp(logp[d])
    sn2 = np.exp(logp[d + 1])
    n = X.shape[0]
    inv_w = np.ones(n) if inv_w is None else inv_w
    Kf = se_kernel(X, X, ell, sf2)
    K = Kf + np.diag(sn2 * inv_w)
    try:
        L, _ = _chol(K)
    except NotPositiveDefiniteError:
        return (1e25, np.zeros_like(logp)) if with_grad else 1e25
    alpha = cho_solve((L, True), y)
    nll = 0.5 * y @ alpha + np.log(np.diag(L)).sum() + 0.5 * n * np.log(2 * np.pi)
    if not with_grad:
        return nll
    Kinv = cho_solve((L, True), np.eye(n))
    W = np.outer(alpha, alpha) - Kinv
    g = np.empty_like(logp)
    for k in range(d):
        diff = X[:, k][:, None] - X[:, k][None, :]
        dK = Kf * (diff * diff) / (ell[k] ** 2)
        g[k] = -0.5 * np.sum(W * dK)
    g[d] = -0.5 * np.sum(W * Kf)
    g[d + 1] = -0.5 * sn2 * np.sum(np.diag(W) * inv_w)
    return nll, g


def _validate_xy(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise DataError("X and y lengths differ")
    if y.size < 2:
        raise DataError("need at least 2 training points")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("non-finite training data")
    return X, y


def gp_fit(X, y, opts: GPOptions | None = None, weights=None) -> GPModel:
    """Fit a GP; hyperparameters by multistart marginal-likelihood maximization.

    ``weights`` are positive observation multiplicities: point ``i`` gets
    noise variance ``noise_var / weights[i]``, which is how a resample with
    repeated points enters the likelihood without rewarding zero noise.
    """
    opts = opts or GPOptions()
    X, y = _validate_xy(X, y)
    n, d = X.shape
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (n,) or np.any(weights <= 0):
            raise DataError("weights must be positive, one per point")
    inv_w = None if weights is None else 1.0 / weights
    if opts.normalize_y:
        y_mean = float(np.average(y, weights=weights))
        y_std = float(np.sqrt(np.average((y - y_mean) ** 2, weights=weights)))
        if y_std == 0.0:
            y_std = 1.0
    else:
        y_mean, y_std = 0.0, 1.0
    yn = (y - y_mean) / y_std

    ell0 = np.broadcast_to(np.asarray(opts.length_scale, float), (d,)).copy()
    p0 = np.concatenate((np.log(ell0), [np.log(opts.signal_var), np.log(opts.noise_var)]))
    if opts.optimize:
        bounds = ([tuple(np.log(opts.length_bounds))] * d
                  + [tuple(np.log(opts.signal_bounds)), tuple(np.log(opts.noise_bounds))])
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])
        p0 = np.clip(p0, lo, hi)
        rng = np.random.default_rng(opts.seed)
        starts = [p0] + [lo + rng.random(d + 2) * (hi - lo) for _ in range(opts.n_restarts)]
        best = None
        for s in starts:
            r = minimize(_neg_log_ml, s, args=(X, yn, inv_w), jac=True, method="L-BFGS-B",
                         bounds=bounds)
            if np.isfinite(r.fun) and (best is None or r.fun < best.fun):
                best = r
        p = best.x if best is not None else p0
    else:
        p = p0
    ell = np.exp(p[:d])
    sf2 = float(np.exp(p[d]))
    sn2 = float(np.exp(p[d + 1]))
    return _assemble(X, yn, ell, sf2, sn2, y_mean, y_std, weights)


def _assemble(X, yn, ell, sf2, sn2, y_mean, y_std, weights=None):
    inv_w = np.ones(X.shape[0]) if weights is None else 1.0 / weights
    K = se_kernel(X, X, ell, sf2) + np.diag(sn2 * inv_w)
    L, jit = _chol(K)
    alpha = cho_solve((L, True), yn)
    nll = _neg_log_ml(np.concatenate((np.log(ell), [np.log(sf2), np.log(sn2)])), X, yn,
                      inv_w, with_grad=False)
    return GPModel(X, yn, np.asarray(ell, float), sf2, sn2, y_mean, y_std, L, alpha, jit, -nll,
                   weights)


def gp_predict(model: GPModel, Xs, include_noise: bool = False):
    """Posterior mean and variance of the latent function (original units)."""
    Xs = np.asarray(Xs, dtype=float)
    if Xs.ndim == 1:
        Xs = Xs[:, None] if model.dim == 1 else Xs[None, :]
    if Xs.shape[1] != model.dim:
        raise DataError(f"expected {model.dim} input columns")
    Ks = se_kernel(Xs, model.X, model.length_scale, model.signal_var)
    mean = Ks @ model.alpha
    v = solve_triangular(model.L, Ks.T, lower=True)
    var = model.signal_var - np.sum(v * v, axis=0)
    np.maximum(var, 0.0, out=var)
    if include_noise:
        var = var + model.noise_var
    return model.y_mean + model.y_std * mean, var * model.y_std ** 2


# --------------------------------------------------------------------------
# bagging

@dataclass
class BaggedEnsemble:
    members: list
    seeds: list
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float
    bootstrap: bool = True
    feature_names: list | None = None
    indices: list = field(default_factory=list, repr=False)

    @property
    def B(self):
        return len(self.members)


def bag_fit(X, y, B: int = 10, seed: int = 0, opts: GPOptions | None = None,
            bootstrap: bool = True, normalize: bool = True, feature_names=None) -> BaggedEnsemble:
    """Fit ``B`` GPs on bootstrap resamples of z-scored data."""
    if B < 1:
        raise DomainError("B must be >= 1")
    X, y = _validate_xy(X, y)
    if normalize:
        x_mean, x_std = X.mean(0), X.std(0)
        x_std = np.where(x_std > 0, x_std, 1.0)
        y_mean, y_std = float(y.mean()), float(y.std()) or 1.0
    else:
        x_mean, x_std = np.zeros(X.shape[1]), np.ones(X.shape[1])
        y_mean, y_std = 0.0, 1.0
    Xn = (X - x_mean) / x_std
    yn = (y - y_mean) / y_std
    base = opts or GPOptions()
    children = np.random.SeedSequence(seed).spawn(B)
    members, seeds, indices = [], [], []
    n = y.size
    for b, ss in enumerate(children):
        s = int(ss.generate_state(1, dtype=np.uint64)[0] % (2 ** 63))
        rng = np.random.default_rng(s)
        idx = rng.integers(0, n, n) if bootstrap else np.arange(n)
        o = GPOptions(**{**base.__dict__, "seed": base.seed if not bootstrap else s})
        try:
            if bootstrap:
                # repeated draws become multiplicity weights
                uniq, counts = np.unique(idx, return_counts=True)
                members.append(gp_fit(Xn[uniq], yn[uniq], o, weights=counts))
            else:
                members.append(gp_fit(Xn, yn, o))
        except (NotPositiveDefiniteError, DataError) as exc:
            raise type(exc)(f"bag member {b}: {exc}") from exc
        seeds.append(s)
        indices.append(idx)
    return BaggedEnsemble(members, seeds, x_mean, x_std, y_mean, y_std, bootstrap,
                          list(feature_names) if feature_names is not None else None, indices)


def bag_predict(ens: BaggedEnsemble, Xs, return_members: bool = False):
    """Ensemble mean and law-of-total-variance predictive variance."""
    Xs = np.asarray(Xs, dtype=float)
    if Xs.ndim == 1:
        Xs = Xs[:, None] if ens.x_mean.size == 1 else Xs[None, :]
    Xn = (Xs - ens.x_mean) / ens.x_std
    means, vars_ = [], []
    for m in ens.members:
        mu, v = gp_predict(m, Xn)
        means.append(mu)
        vars_.append(v)
    M = np.array(means)
    Vv = np.array(vars_)
    mean = M.mean(0)
    var = M.var(0) + Vv.mean(0)
    out = (ens.y_mean + ens.y_std * mean, var * ens.y_std ** 2)
    if return_members:
        return out + (ens.y_mean + ens.y_std * M, Vv * ens.y_std ** 2)
    return out


# --------------------------------------------------------------------------
# artifact I/O

def _digest(*arrays):
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype=float).tobytes())
    return h.hexdigest()


def save_ensemble(ens: BaggedEnsemble, path, extra: dict | None = None):
    """Write ``<path>.json`` (metadata) and ``<path>.npz`` (matrices)."""
    path = Path(path)
    meta = {
        "artifact": "batwb.bagged_gp",
        "version": ARTIFACT_VERSION,
        "B": ens.B,
        "seeds": [int(s) for s in ens.seeds],
        "bootstrap": ens.bootstrap,
        "feature_names": ens.feature_names,
        "x_mean": ens.x_mean.tolist(),
        "x_std": ens.x_std.tolist(),
        "y_mean": ens.y_mean,
        "y_std": ens.y_std,
        "members": [],
    }
    blobs = {}
    for b, m in enumerate(ens.members):
        meta["members"].append({
            "length_scale": m.length_scale.tolist(), "signal_var": m.signal_var,
            "noise_var": m.noise_var, "y_mean": m.y_mean, "y_std": m.y_std,
            "jitter": m.jitter, "log_ml": m.log_ml,
            "training_digest": _digest(m.X, m.y),
        })
        blobs[f"X{b}"] = m.X
        blobs[f"y{b}"] = m.y
        blobs[f"L{b}"] = m.L
        blobs[f"alpha{b}"] = m.alpha
        if m.weights is not None:
            blobs[f"w{b}"] = m.weights
    if extra:
        meta.update(extra)
    blob_path = path.with_suffix(".npz")
    meta["blob"] = blob_path.name
    _write_npz(blob_path, blobs)
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return path.with_suffix(".json")


def _write_npz(path, arrays: dict):
    """``np.savez`` layout with fixed zip timestamps, so equal inputs give equal bytes."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name, a in arrays.items():
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(a), allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0)),
                        buf.getvalue())


def load_ensemble(path):
    path = Path(path).with_suffix(".json")
    meta = json.loads(path.read_text())
    if meta.get("artifact") != "batwb.bagged_gp":
        raise DataError(f"{path}: not a bagged-GP artifact")
    if meta.get("version") != ARTIFACT_VERSION:
        raise DataError(f"{path}: unsupported artifact version {meta.get('version')}")
    blobs = np.load(path.with_name(meta["blob"]))
    members = []
    for b, mm in enumerate(meta["members"]):
        X, y = blobs[f"X{b}"], blobs[f"y{b}"]
        if _digest(X, y) != mm["training_digest"]:
            raise DataError(f"{path}: training digest mismatch for member {b}")
        members.append(GPModel(X, y, np.array(mm["length_scale"]), mm["signal_var"],
                               mm["noise_var"], mm["y_mean"], mm["y_std"], blobs[f"L{b}"],
                               blobs[f"alpha{b}"], mm["jitter"], mm["log_ml"],
                               blobs[f"w{b}"] if f"w{b}" in blobs else None))
    ens = BaggedEnsemble(members, meta["seeds"], np.array(meta["x_mean"]),
                         np.array(meta["x_std"]), meta["y_mean"], meta["y_std"],
                         meta["bootstrap"], meta["feature_names"])
    return ens, meta
