"""Configuration, data ingestion, run orchestration and result export."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import platform
import tempfile
import time
import uuid
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml
from jsonschema import Draft202012Validator

from . import __version__
from .errors import ConfigError, DataError
from .timeseries import TimeSeries

log = logging.getLogger(__name__)

CONFIG_ENV = "BATWB_CONFIG"

# named random streams, each an independent child of the root seed
STREAMS = {"identify": 0, "soh": 1, "hybrid": 2, "simulate": 3, "synthetic": 4}


def stream_seed(seed: int, name: str) -> int:
    """Seed for stream ``name``: a counter-based child of the root seed."""
    ss = np.random.SeedSequence(seed, spawn_key=(STREAMS[name],))
    return int(ss.generate_state(1, dtype=np.uint64)[0] % (2 ** 63))


# --------------------------------------------------------------------------
# configuration

def load_schema() -> dict:
    ref = resources.files("batwb") / "data" / "schema.json"
    return json.loads(ref.read_text())


@dataclass
class WorkbenchConfig:
    data: dict
    base_dir: Path
    source: Path | None = None

    def section(self, name) -> dict:
        return self.data.get(name, {}) or {}

    @property
    def seed(self) -> int:
        return int(self.data.get("seed", 0))

    def path(self, rel) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else (self.base_dir / p)

    def digest(self) -> str:
        return config_digest(self.data)


def config_digest(data: dict) -> str:
    """SHA-256 of the canonical JSON form; key order and formatting do not matter."""
    canon = json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode()).hexdigest()


def _referenced_paths(data: dict):
    """(key, path) pairs for every file the config points at."""
    out = []
    ocp = data.get("ocp", {}) or {}
    for k in ("positive", "negative", "positive_charge", "positive_discharge"):
        if k in ocp and not str(ocp[k]).startswith("builtin:"):
            out.append((f"ocp.{k}", ocp[k]))
    sim = data.get("simulate", {}) or {}
    if isinstance(sim.get("profile"), str):
        out.append(("simulate.profile", sim["profile"]))
    if "R_l_table" in sim:
        out.append(("simulate.R_l_table", sim["R_l_table"]))
    ident = data.get("identify", {}) or {}
    for k in ("dataset", "ocv", "spec_file"):
        if k in ident:
            out.append((f"identify.{k}", ident[k]))
    soh_ = data.get("soh", {}) or {}
    if "data" in soh_:
        out.append(("soh.data", soh_["data"]))
    hyb = data.get("hybrid", {}) or {}
    for group in ("train", "validation", "test"):
        for i, item in enumerate(hyb.get(group, []) or []):
            out.append((f"hybrid.{group}[{i}]", item["path"]))
    if "R_l_table" in hyb:
        out.append(("hybrid.R_l_table", hyb["R_l_table"]))
    return out


def validate_config(data: dict, base_dir: Path, check_files: bool = True) -> list:
    """List of human-readable problems (empty when valid)."""
    problems = []
    v = Draft202012Validator(load_schema())
    for err in sorted(v.iter_errors(data), key=lambda e: list(e.path)):
        where = ".".join(str(p) for p in err.path) or "<root>"
        problems.append(f"{where}: {err.message}")
    if problems or not check_files:
        return problems
    for key, rel in _referenced_paths(data):
        p = Path(rel) if Path(rel).is_absolute() else base_dir / rel
        if not p.is_file():
            problems.append(f"{key}: file not found: {p}")
    return problems


def load_config(path=None, check_files: bool = True) -> WorkbenchConfig:
    """Read and validate a YAML (or JSON) config; ``None`` falls back to ``$BATWB_CONFIG``."""
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if path is None:
        return WorkbenchConfig({}, Path.cwd(), None)
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    problems = validate_config(data, path.parent, check_files)
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))
    return WorkbenchConfig(data, path.parent.resolve(), path.resolve())


# --------------------------------------------------------------------------
# ingestion

@dataclass
class IngestReport:
    n_read: int
    dropped_duplicates: int
    dropped_nan: int
    resampled: bool = False

    def to_dict(self):
        return self.__dict__.copy()


def ingest_timeseries(path, required=("t", "I", "V"), resample_period: float | None = None):
    """Parse a CSV record; drop duplicate stamps and NaN rows; enforce increasing time.

    Returns ``(TimeSeries, IngestReport)``. With ``resample_period`` the
    record is linearly interpolated onto a uniform grid.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    text = path.read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) < 2:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"{path}: schema mismatch, missing column(s) {missing}")
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != len(header):
            raise DataError(f"{path}:{k}: expected {len(header)} fields")
        try:
            rows.append([float(x) if x.strip() not in ("", "nan", "NaN", "NA") else math.nan
                         for x in parts])
        except ValueError:
            raise DataError(f"{path}:{k}: non-numeric field") from None
    arr = np.array(rows, dtype=float)
    n_read = arr.shape[0]
    bad = ~np.all(np.isfinite(arr), axis=1)
    n_nan = int(bad.sum())
    if n_nan:
        log.warning("%s: dropped %d row(s) with missing values", path, n_nan)
    arr = arr[~bad]
    if arr.shape[0] == 0:
        raise DataError(f"{path}: no valid rows")
    ti = header.index("t")
    t = arr[:, ti]
    dup = np.zeros(t.size, bool)
    dup[1:] = t[1:] == t[:-1]
    n_dup = int(dup.sum())
    if n_dup:
        log.warning("%s: dropped %d duplicate timestamp(s)", path, n_dup)
    arr = arr[~dup]
    if np.any(np.diff(arr[:, ti]) <= 0):
        raise DataError(f"{path}: time is not monotone increasing")
    cols = {h: arr[:, i] for i, h in enumerate(header)}
    ts = TimeSeries(cols)
    resampled = False
    if resample_period is not None:
        if resample_period <= 0:
            raise DataError("resample period must be > 0")
        t0, t1 = cols["t"][0], cols["t"][-1]
        tn = t0 + resample_period * np.arange(int(math.floor((t1 - t0) / resample_period)) + 1)
        ts = TimeSeries({h: (tn if h == "t" else np.interp(tn, cols["t"], v))
                         for h, v in cols.items()})
        resampled = True
    return ts, IngestReport(n_read, n_dup, n_nan, resampled)


def write_table(path, columns: dict):
    """CSV of equal-length columns with round-trip float formatting."""
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    lines = [",".join(names)]
    for row in zip(*arrays):
        lines.append(",".join(repr(float(v)) if np.issubdtype(type(v), np.floating)
                              else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# manifest

def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_text(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunManifest:
    command: str
    config_digest: str
    seed: int
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    started: float = field(default_factory=time.time)
    run_id: str = field(default_factory=lambda: uuid.uuid4().hex[:12])

    def add_input(self, path):
        self.inputs[str(path)] = file_digest(path)

    def add_output(self, path, out_dir):
        self.outputs[str(Path(path).relative_to(out_dir))] = file_digest(path)

    def write(self, out_dir, status="ok"):
        import scipy

        doc = {
            "run_id": self.run_id, "command": self.command, "status": status,
            "config_digest": self.config_digest, "seed": self.seed,
            "inputs": self.inputs, "outputs": self.outputs,
            "versions": {"batwb": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "started": self.started, "wall_clock_s": time.time() - self.started,
        }
        atomic_write_text(Path(out_dir) / "manifest.json", json.dumps(doc, indent=2, sort_keys=True))


# --------------------------------------------------------------------------
# plot-ready export

@dataclass
class Figure:
    name: str
    series: dict                 # label -> (x, y)
    xlabel: str = "x"
    ylabel: str = "y"
    kind: str = "line"           # "line" or "bar"


def histogram_series(values, bins: int = 20):
    """Bin centers and counts (counts sum to the number of finite samples)."""
    v = np.asarray(values, float)
    v = v[np.isfinite(v)]
    counts, edges = np.histogram(v, bins=bins)
    return 0.5 * (edges[:-1] + edges[1:]), counts.astype(float)


def export_plot_data(figures, out_dir) -> list:
    """Write ``<name>.csv`` (tidy: series, x, y) and ``<name>.svg`` per figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fig in figures:
        csv_path = out_dir / f"{fig.name}.csv"
        lines = ["series,x,y"]
        for label, (x, y) in fig.series.items():
            x = np.asarray(x, float)
            y = np.asarray(y, float)
            if x.shape != y.shape:
                raise DataError(f"figure {fig.name}: series {label} has unequal x/y lengths")
            lines += [f"{label},{float(a)!r},{float(b)!r}" for a, b in zip(x, y)]
        csv_path.write_text("\n".join(lines) + "\n")
        svg_path = out_dir / f"{fig.name}.svg"
        svg_path.write_text(render_svg(fig))
        written += [csv_path, svg_path]
    return written


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


def render_svg(fig: Figure, width: int = 640, height: int = 400) -> str:
    """Minimal static line (or bar) chart."""
    ml, mr, mt, mb = 60, 20, 30, 45
    xs = [np.asarray(x, float) for x, _ in fig.series.values()]
    ys = [np.asarray(y, float) for _, y in fig.series.values()]
    allx = np.concatenate(xs) if xs else np.zeros(1)
    ally = np.concatenate(ys) if ys else np.zeros(1)
    finite = np.isfinite(allx) & np.isfinite(ally)
    x0, x1 = (float(allx[finite].min()), float(allx[finite].max())) if finite.any() else (0.0, 1.0)
    y0, y1 = (float(ally[finite].min()), float(ally[finite].max())) if finite.any() else (0.0, 1.0)
    if fig.kind == "bar":
        y0 = min(y0, 0.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = width - ml - mr, height - mt - mb

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + (1.0 - (y - y0) / (y1 - y0)) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
             f'<text x="{width / 2:.1f}" y="{height - 8}" text-anchor="middle" '
             f'font-size="12">{_esc(fig.xlabel)}</text>',
             f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
             f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{_esc(fig.ylabel)}</text>',
             f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">'
             f'{_esc(fig.name)}</text>']
    for val, anchor in ((x0, "start"), (x1, "end")):
        parts.append(f'<text x="{px(val):.1f}" y="{mt + ph + 16}" text-anchor="{anchor}" '
                     f'font-size="10">{val:.4g}</text>')
    for val in (y0, y1):
        parts.append(f'<text x="{ml - 4}" y="{py(val) + 4:.1f}" text-anchor="end" '
                     f'font-size="10">{val:.4g}</text>')
    for k, (label, (x, y)) in enumerate(fig.series.items()):
        color = _COLORS[k % len(_COLORS)]
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        ok = np.isfinite(x) & np.isfinite(y)
        if fig.kind == "bar" and x.size:
            w = pw / max(x.size, 1) * 0.8
            for a, b in zip(x[ok], y[ok]):
                top = py(max(b, 0.0))
                parts.append(f'<rect x="{px(a) - w / 2:.2f}" y="{top:.2f}" width="{w:.2f}" '
                             f'height="{abs(py(0.0) - py(b)):.2f}" fill="{color}" '
                             f'fill-opacity="0.6"/>')
        else:
            step = max(1, int(ok.sum()) // 2000)
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok][::step], y[ok][::step]))
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" '
                         f'points="{pts}"/>')
        parts.append(f'<text x="{ml + 8}" y="{mt + 14 + 14 * k}" font-size="11" '
                     f'fill="{color}">{_esc(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# --------------------------------------------------------------------------
# building model objects from a config

def build_cell(cfg: WorkbenchConfig):
    from .params import preset

    sec = cfg.section("cell")
    return preset(sec.get("preset", "nmc_graphite"), **(sec.get("overrides") or {}))


def build_ocp(cfg: WorkbenchConfig):
    from .ocp import OCPSet, default_ocp, load_table

    sec = cfg.section("ocp")
    cell_preset = cfg.section("cell").get("preset", "nmc_graphite")
    chem = sec.get("chemistry", "lfp" if cell_preset.startswith("lfp") else "nmc")
    base = default_ocp(chem)
    tables = {}
    for k in ("positive", "negative", "positive_charge", "positive_discharge"):
        tables[k] = load_table(sec[k], cfg.base_dir) if k in sec else getattr(base, k)
    if "positive" in sec and not ("positive_charge" in sec or "positive_discharge" in sec):
        tables["positive_charge"] = tables["positive_discharge"] = None
    return OCPSet(**tables)


def build_grid(cfg: WorkbenchConfig):
    from .params import SpatialGrid

    return SpatialGrid(**cfg.section("grid"))


def build_aging(cfg: WorkbenchConfig):
    from .degradation import AgingParameters

    sec = dict(cfg.section("aging"))
    if not sec.pop("enabled", False):
        return None
    return AgingParameters(**sec)


def build_coreshell(cfg: WorkbenchConfig):
    from .coreshell import CoreShellParameters

    sec = dict(cfg.section("coreshell"))
    if not sec.pop("enabled", False):
        return None
    return CoreShellParameters(**sec)


def load_resistance_table(path):
    """Matrix CSV: header ``soc,<I_1>,<I_2>,...``; each row a SOC then resistances [Ohm]."""
    from .ocp import ResistanceTable

    rows = [ln.split(",") for ln in Path(path).read_text().splitlines()
            if ln.strip() and not ln.startswith("#")]
    if len(rows) < 3:
        raise DataError(f"{path}: resistance table needs a header and >= 2 rows")
    try:
        current = [float(x) for x in rows[0][1:]]
        body = np.array([[float(x) for x in r] for r in rows[1:]])
    except ValueError:
        raise DataError(f"{path}: non-numeric resistance table entry") from None
    if body.shape[1] != len(current) + 1:
        raise DataError(f"{path}: ragged resistance table")
    return ResistanceTable(body[:, 0], current, body[:, 1:])


def build_profile(cfg: WorkbenchConfig, capacity_Ah: float, seed: int) -> TimeSeries:
    sec = cfg.section("simulate")
    spec = sec.get("profile", {"type": "constant"})
    T_K = sec.get("T_K")
    if isinstance(spec, str):
        prof, _ = ingest_timeseries(cfg.path(spec), required=("t", "I"))
    else:
        kind = spec["type"]
        level = spec.get("current_A", spec.get("C_rate", 1.0) * capacity_Ah)
        duration = spec.get("duration_s", 3600.0)
        dt = spec.get("dt_s", 10.0)
        T_K = spec.get("T_K", T_K)
        if kind == "constant":
            n = int(round(duration / dt)) + 1
            prof = TimeSeries({"t": np.arange(n) * dt, "I": np.full(n, float(level))})
        elif kind == "pulse":
            from .identification import pulse_profile

            prof = pulse_profile(level, duration, dt)
        else:
            from .hybrid import drive_cycle

            prof = drive_cycle(capacity_Ah, duration, dt,
                               seed=stream_seed(seed, "simulate") + spec.get("seed_offset", 0),
                               max_C=abs(level) / capacity_Ah)
    if T_K is not None and "T" not in prof:
        prof = TimeSeries({**prof.columns, "T": np.full(len(prof), float(T_K))})
    return prof


def _sim_options(cfg: WorkbenchConfig, **extra):
    from .espm import SimOptions

    sec = cfg.section("simulate")
    table = load_resistance_table(cfg.path(sec["R_l_table"])) if "R_l_table" in sec else None
    kw = dict(soc0=sec.get("soc0", 1.0), max_dt=sec.get("max_dt"), v_min=sec.get("v_min"),
              v_max=sec.get("v_max"), aging=build_aging(cfg), coreshell=build_coreshell(cfg),
              R_l_table=table)
    kw.update(extra)
    return SimOptions(**kw)


# --------------------------------------------------------------------------
# runners; each returns the list of files it wrote

@dataclass
class RunContext:
    cfg: WorkbenchConfig
    out_dir: Path
    seed: int
    manifest: RunManifest
    options: dict = field(default_factory=dict)

    @property
    def plots(self) -> bool:
        return bool(self.cfg.section("output").get("plots", True))

    def out(self, name) -> Path:
        return self.out_dir / name

    def write_json(self, name, doc) -> Path:
        p = self.out(name)
        p.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
        return p

    def figures(self, figs) -> list:
        return export_plot_data(figs, self.out_dir / "plots") if self.plots else []


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def run_simulate(ctx: RunContext) -> list:
    from .espm import AGING_COLUMNS, BASE_COLUMNS, CORESHELL_COLUMNS, INTERNAL_COLUMNS, Simulator

    cfg = ctx.cfg
    cell = build_cell(cfg)
    prof = build_profile(cfg, cell.capacity, ctx.seed)
    opts = _sim_options(cfg, raise_on_error=False)
    res = Simulator(cell, build_ocp(cfg), build_grid(cfg), opts).run(prof)
    cols = list(BASE_COLUMNS)
    if cfg.section("simulate").get("internal_signals", False):
        cols += [c for c in INTERNAL_COLUMNS + AGING_COLUMNS + CORESHELL_COLUMNS if c in res]
    csv_path = ctx.out("simulation.csv")
    res.to_csv(csv_path, cols)
    t, I = np.asarray(res.t), np.asarray(res.I)
    q = float(np.sum(I[:-1] * np.diff(t))) / 3600.0 if len(res) > 1 else 0.0
    summary = {"status": res.status, "error": None if res.error is None else str(res.error),
               "n_samples": len(res), "n_requested": len(prof), "charge_throughput_Ah": q,
               "V_final": float(res.V[-1]) if len(res) else None,
               "SOC_n_final": float(res.SOC_n[-1]) if len(res) else None}
    out = [csv_path, ctx.write_json("simulation_summary.json", _jsonable(summary))]
    out += ctx.figures([Figure("voltage", {"V": (t, res.V)}, "t [s]", "V [V]")])
    if res.status == "failed":
        raise RuntimeError(f"simulation failed: {res.error}")
    return out


def _identification_spec(cfg: WorkbenchConfig, cell, sec):
    from .identification import ParamBound, ParameterSpec

    name = sec.get("preset", "THETA1")
    if name == "custom" or "bounds" in sec or "spec_file" in sec:
        if "spec_file" in sec:
            raw = json.loads(cfg.path(sec["spec_file"]).read_text())
        elif "bounds" in sec:
            raw = sec["bounds"]
        else:
            raise ConfigError("identify.preset custom needs identify.bounds or identify.spec_file")
        spec = ParameterSpec([ParamBound(*b) for b in raw])
    else:
        spec = ParameterSpec.preset(name, cell, sec.get("rel_bounds", 0.3))
    if "parameters" in sec:
        unknown = set(sec["parameters"]) - set(spec.names)
        if unknown:
            raise ConfigError(f"identify.parameters not in the search space: {sorted(unknown)}")
        spec = spec.subset(sec["parameters"])
    return spec


def run_identify(ctx: RunContext) -> list:
    from .espm import SimOptions, Simulator
    from .identification import (IdentificationDataset, OCVDataset, ParameterSpec,
                                 apply_parameters, identify_fresh, identify_ocv)

    cfg = ctx.cfg
    sec = cfg.section("identify")
    cell = build_cell(cfg)
    ocp = build_ocp(cfg)
    seed = stream_seed(ctx.seed, "identify")
    budget = int(ctx.options.get("budget") or sec.get("budget", 2000))
    out = []
    if sec.get("preset") == "VARTHETA":
        if "ocv" not in sec:
            raise ConfigError("identify.ocv is required for the VARTHETA preset")
        ts, _ = ingest_timeseries_columns(cfg.path(sec["ocv"]), ("capacity_Ah", "V"))
        ocv = OCVDataset(ts["capacity_Ah"], ts["V"])
        spec = ParameterSpec.preset("VARTHETA", cell, sec.get("rel_bounds", 0.3))
        if "parameters" in sec:
            spec = spec.subset(sec["parameters"])
        res, _ = identify_ocv(ocv, ocp, spec, budget, seed, Q=sec.get("Q_Ah"))
        fitted = None
    else:
        if "dataset" not in sec:
            raise ConfigError("identify.dataset is required")
        ts, report = ingest_timeseries(cfg.path(sec["dataset"]))
        cap = sec.get("capacity_Ah", cell.capacity)
        ds = IdentificationDataset.from_timeseries(ts, cap, sec.get("soc0", 1.0),
                                                   name=Path(sec["dataset"]).stem)
        spec = _identification_spec(cfg, cell, sec)
        grid = build_grid(cfg)
        res = identify_fresh(ds, cell, ocp, spec, budget, seed, grid,
                             tuple(sec.get("weights", (1.0, 1.0, 1.0))),
                             workers=int(ctx.options.get("workers") or sec.get("workers", 1)))
        best = apply_parameters(cell, res.params)
        sim = Simulator(best, ocp, grid, SimOptions(soc0=ds.soc0, raise_on_error=False))
        fitted = sim.run(ds.profile())
        fit_path = ctx.out("fitted_voltage.csv")
        n = len(fitted)
        TimeSeries({"t": ds.t[:n], "I": ds.I[:n], "V_measured": ds.V[:n],
                    "V_model": fitted.V}).to_csv(fit_path)
        out.append(fit_path)
    doc = {"parameters": res.params, "cost": res.cost, "n_evals": res.n_evals,
           "budget": budget, "search_space": spec.to_list()}
    out.append(ctx.write_json("identification.json", _jsonable(doc)))
    trace = ctx.out("convergence.csv")
    write_table(trace, {k: [h[k] for h in res.history]
                        for k in ("generation", "n_evals", "best_cost")})
    out.append(trace)
    figs = [Figure("convergence", {"best_cost": ([h["n_evals"] for h in res.history],
                                                 [h["best_cost"] for h in res.history])},
                   "evaluations", "cost")]
    if fitted is not None:
        figs.append(Figure("fit", {"measured": (ds.t[:len(fitted)], ds.V[:len(fitted)]),
                                   "model": (fitted.t, fitted.V)}, "t [s]", "V [V]"))
    return out + ctx.figures(figs)


def ingest_timeseries_columns(path, required):
    """Like :func:`ingest_timeseries` for tables whose first column is not time."""
    text = Path(path).read_text().splitlines()
    header = [h.strip() for h in text[0].split(",")] if text else []
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"{path}: schema mismatch, missing column(s) {missing}")
    rows = []
    for k, ln in enumerate(text[1:], start=2):
        if not ln.strip():
            continue
        try:
            rows.append([float(x) for x in ln.split(",")])
        except ValueError:
            raise DataError(f"{path}:{k}: non-numeric field") from None
    arr = np.array(rows, float)
    if arr.size == 0:
        raise DataError(f"{path}: empty file")
    ok = np.all(np.isfinite(arr), axis=1)
    n_nan = int((~ok).sum())
    if n_nan:
        log.warning("%s: dropped %d row(s) with missing values", path, n_nan)
    arr = arr[ok]
    cols = {h: arr[:, i] for i, h in enumerate(header)}
    cols["t"] = np.arange(arr.shape[0], dtype=float)
    return TimeSeries(cols), IngestReport(len(rows), 0, n_nan)


# -- state of health --------------------------------------------------------

def _soh_records(ts: TimeSeries):
    """Split a cycling table into per-cycle records by ``cycle_index``."""
    if "cycle_index" not in ts:
        raise DataError("cycling data needs a cycle_index column")
    ci = np.asarray(ts["cycle_index"])
    out = []
    for c in np.unique(ci):
        idx = np.flatnonzero(ci == c)
        rec = TimeSeries({k: v[idx] for k, v in ts.columns.items()})
        q = float(rec["Q_measured"][0]) if "Q_measured" in rec else math.nan
        out.append((float(c), rec, q))
    return out


def _soh_segment_options(cfg, ctx):
    from .soh import SegmentOptions

    sec = cfg.section("soh")
    cc = tuple(sec.get("cc_window", (0.0, 1200.0)))
    cv = tuple(sec.get("cv_window", (0.0, 300.0)))
    if ctx.options.get("window"):
        cc = ctx.options["window"]
    return SegmentOptions(cc_window=cc, cv_window=cv)


def _soh_features(records, seg_opts):
    from .soh import extract_features, segment_charge

    rows, keep, skipped = [], [], []
    for c, rec, q in records:
        try:
            rows.append(extract_features(segment_charge(rec, seg_opts)).values)
            keep.append((c, q))
        except DataError as exc:
            log.warning("cycle %g skipped: %s", c, exc)
            skipped.append({"cycle": c, "reason": str(exc)})
    F = np.array(rows) if rows else np.empty((0, 12))
    return F, keep, skipped


def run_soh(ctx: RunContext, action: str) -> list:
    from .gp import GPOptions, bag_fit, bag_predict, load_ensemble, save_ensemble
    from .soh import FEATURE_NAMES, error_metrics, mrmr_rank, soh

    cfg = ctx.cfg
    sec = cfg.section("soh")
    data_path = ctx.options.get("data") or (cfg.path(sec["data"]) if "data" in sec else None)
    if data_path is None:
        raise ConfigError("soh.data is required")
    ts, report = ingest_timeseries(data_path, required=("t", "I", "V", "cycle_index"))
    seg_opts = _soh_segment_options(cfg, ctx)
    F, keep, skipped = _soh_features(_soh_records(ts), seg_opts)
    if F.shape[0] == 0:
        raise DataError("no usable charge events in the cycling data")
    cycles = np.array([c for c, _ in keep])
    Q = np.array([q for _, q in keep])
    out = []
    if action == "train":
        if not np.all(np.isfinite(Q)):
            raise DataError("training needs a Q_measured column")
        Q_nom = float(sec.get("Q_nom", Q.max()))
        y = soh(Q, Q_nom)
        ok = np.all(np.isfinite(F), axis=1)
        k = int(sec.get("n_features", 4))
        ranked = mrmr_rank(F[ok], y[ok], k)
        names = [FEATURE_NAMES[j] for j in ranked]
        B = int(ctx.options.get("bags") or sec.get("bags", 10))
        ens = bag_fit(F[ok][:, ranked], y[ok], B, stream_seed(ctx.seed, "soh"),
                      GPOptions(n_restarts=int(sec.get("n_restarts", 2))), feature_names=names)
        model = save_ensemble(ens, ctx.out("soh_model.json"),
                              {"Q_nom": Q_nom, "feature_index": ranked,
                               "cc_window": list(seg_opts.cc_window),
                               "cv_window": list(seg_opts.cv_window)})
        out += [model, model.with_suffix(".npz")]
        mu, _ = bag_predict(ens, F[ok][:, ranked])
        rmse, rmspe, mape = error_metrics(y[ok], mu)
        out.append(ctx.write_json("soh_train.json", _jsonable({
            "n_cycles": int(ok.sum()), "skipped": skipped, "features": names, "B": B,
            "train_RMSE": rmse, "train_RMSPE_pct": rmspe, "train_MAPE_pct": mape,
            "ingest": report.to_dict()})))
        return out + ctx.figures([Figure("soh_train_errors",
                                         {"count": histogram_series(mu - y[ok], 15)},
                                         "error [%]", "count", kind="bar")])
    model_path = ctx.options.get("model") or (cfg.path(sec["model"]) if "model" in sec else None)
    if model_path is None:
        raise ConfigError("soh predict/eval need a model (soh.model or --model)")
    if not Path(model_path).with_suffix(".json").is_file():
        raise DataError(f"model not found: {model_path}")
    ens, meta = load_ensemble(model_path)
    ctx.manifest.add_input(Path(model_path).with_suffix(".json"))
    sel = meta["feature_index"]
    Fs = F[:, sel]
    ok = np.all(np.isfinite(Fs), axis=1)
    mu, var = bag_predict(ens, Fs[ok])
    pred = ctx.out("soh_predictions.csv")
    write_table(pred, {"cycle_index": cycles[ok], "SOH_pred": mu, "SOH_std": np.sqrt(var)})
    out.append(pred)
    if action == "eval":
        if not np.all(np.isfinite(Q[ok])):
            raise DataError("evaluation needs a Q_measured column")
        y = soh(Q[ok], meta["Q_nom"])
        rmse, rmspe, mape = error_metrics(y, mu)
        out.append(ctx.write_json("soh_metrics.json", _jsonable({
            "n_cycles": int(ok.sum()), "skipped": skipped, "RMSE": rmse,
            "RMSPE_pct": rmspe, "MAPE_pct": mape})))
        out += ctx.figures([
            Figure("soh_eval", {"measured": (cycles[ok], y), "predicted": (cycles[ok], mu)},
                   "cycle", "SOH [%]"),
            Figure("soh_eval_errors", {"count": histogram_series(mu - y, 15)},
                   "error [%]", "count", kind="bar")])
    return out


# -- hybrid hysteresis model -------------------------------------------------

def _hybrid_pairs(ctx, group, cell, ocp, grid, table):
    from .hybrid import simulate_physics

    pairs = []
    for item in ctx.cfg.section("hybrid").get(group, []) or []:
        exp, _ = ingest_timeseries(ctx.cfg.path(item["path"]))
        sim = simulate_physics(cell, ocp, exp, item.get("soc0", 1.0), grid, table)
        pairs.append((Path(item["path"]).stem, exp, sim))
    return pairs


def run_hybrid(ctx: RunContext, action: str) -> list:
    from .hybrid import DEFAULT_GRID, HybridModel, train_hybrid

    cfg = ctx.cfg
    sec = cfg.section("hybrid")
    cell, ocp, grid = build_cell(cfg), build_ocp(cfg), build_grid(cfg)
    if not ocp.has_branches:
        raise ConfigError("the hybrid model needs charge and discharge positive OCP branches")
    table = load_resistance_table(cfg.path(sec["R_l_table"])) if "R_l_table" in sec else None
    out = []
    if action == "train":
        train = _hybrid_pairs(ctx, "train", cell, ocp, grid, table)
        if not train:
            raise ConfigError("hybrid.train lists no records")
        val = _hybrid_pairs(ctx, "validation", cell, ocp, grid, table)
        hgrid = {k: tuple(int(v) if k != "feature_rate" else float(v) for v in vals)
                 for k, vals in {**DEFAULT_GRID, **sec.get("grid", {})}.items()}
        model = train_hybrid([(e, s) for _, e, s in train], [(e, s) for _, e, s in val] or None,
                             hgrid, stream_seed(ctx.seed, "hybrid"))
        path = ctx.out("hybrid_model.json")
        model.save(path)
        out.append(path)
    else:
        model_path = ctx.options.get("model") or (cfg.path(sec["model"]) if "model" in sec
                                                  else None)
        if model_path is None or not Path(model_path).is_file():
            raise DataError(f"hybrid model not found: {model_path}")
        model = HybridModel.load(model_path)
        ctx.manifest.add_input(model_path)
    test = _hybrid_pairs(ctx, "test", cell, ocp, grid, table)
    report = {"records": []}
    figs = []
    for name, exp, sim in test:
        n = len(sim)
        V_exp = np.asarray(exp.V, float)[:n]
        V_h = model.predict_residual(sim)
        V_hyb = sim.V + V_h
        p = ctx.out(f"hybrid_{name}.csv")
        TimeSeries({"t": sim.t, "I": sim.I, "V_measured": V_exp, "V_cs": sim.V, "V_h": V_h,
                    "V_hybrid": V_hyb}).to_csv(p)
        out.append(p)
        r_phys = float(np.sqrt(np.mean((V_exp - sim.V) ** 2)))
        r_hyb = float(np.sqrt(np.mean((V_exp - V_hyb) ** 2)))
        report["records"].append({"name": name, "n_samples": n, "rmse_physics_V": r_phys,
                                  "rmse_hybrid_V": r_hyb,
                                  "reduction": 1.0 - r_hyb / r_phys if r_phys > 0 else None})
        figs.append(Figure(f"hybrid_{name}", {"measured": (sim.t, V_exp),
                                              "physics": (sim.t, sim.V),
                                              "hybrid": (sim.t, V_hyb)}, "t [s]", "V [V]"))
    if action == "train":
        report["model"] = {"chosen": model.validation.get("chosen")}
    out.append(ctx.write_json(f"hybrid_{action}_report.json", _jsonable(report)))
    return out + ctx.figures(figs)


COMMANDS = ("simulate", "identify", "soh", "hybrid")


def run(command: str, cfg: WorkbenchConfig, out_dir, seed: int | None = None,
        action: str | None = None, options: dict | None = None) -> list:
    """Execute one subcommand; writes outputs and the manifest under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed if seed is None else int(seed)
    data = dict(cfg.data, seed=seed)
    eff = WorkbenchConfig(data, cfg.base_dir, cfg.source)
    label = command if action is None else f"{command} {action}"
    manifest = RunManifest(label, eff.digest(), seed)
    if cfg.source is not None:
        manifest.add_input(cfg.source)
    for _, rel in _referenced_paths(data):
        if not str(rel).startswith("builtin:"):
            manifest.add_input(eff.path(rel))
    ctx = RunContext(eff, out_dir, seed, manifest, dict(options or {}))
    if command == "simulate":
        outputs = run_simulate(ctx)
    elif command == "identify":
        outputs = run_identify(ctx)
    elif command == "soh":
        outputs = run_soh(ctx, action or "train")
    elif command == "hybrid":
        outputs = run_hybrid(ctx, action or "train")
    else:
        raise ConfigError(f"unknown command {command!r}")
    missing = [str(p) for p in outputs if not Path(p).is_file()]
    if missing:
        raise RuntimeError(f"declared outputs missing: {missing}")
    for p in outputs:
        manifest.add_output(p, out_dir)
    manifest.write(out_dir)
    return outputs
