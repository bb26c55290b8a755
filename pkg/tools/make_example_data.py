"""Write the synthetic example datasets used by the configs in ``configs/``.

Usage: python3 tools/make_example_data.py [OUT_DIR]   (default: configs/data)
"""

import sys
import warnings
from pathlib import Path

import numpy as np

from batwb.errors import ExtrapolationWarning
from batwb.hybrid import drive_cycle, synthetic_experiment
from batwb.identification import pulse_profile, synthetic_dataset
from batwb.ocp import default_ocp
from batwb.params import SpatialGrid, balance_positive_window, preset
from batwb.soh import synthetic_fleet
from batwb.timeseries import TimeSeries
from batwb.workbench import write_table


def identification_data(out):
    cell = balance_positive_window(preset("nmc_graphite"))
    prof = pulse_profile(cell.capacity, 2400.0, 20.0)
    ds = synthetic_dataset(cell, default_ocp("nmc"), prof, soc0=0.9,
                           grid=SpatialGrid(n_r=10, n_x_p=4, n_x_s=3, n_x_n=4))
    TimeSeries({"t": ds.t, "I": ds.I, "V": ds.V, "SOC_CC": ds.SOC_CC}).to_csv(
        out / "pulse_nmc.csv")


def soh_data(out, n_cycles=40, seed=7):
    records, Q, cycles = synthetic_fleet(n_cycles=n_cycles, seed=seed)
    cols = {k: [] for k in ("t", "I", "V", "cycle_index", "Q_measured")}
    t0 = 0.0
    for rec, q, c in zip(records, Q, cycles):
        n = len(rec)
        cols["t"].append(rec.t + t0)
        cols["I"].append(rec.I)
        cols["V"].append(rec.V)
        cols["cycle_index"].append(np.full(n, float(round(c))))
        cols["Q_measured"].append(np.full(n, q))
        t0 = float(rec.t[-1] + t0) + 3600.0
    write_table(out / "cycling.csv", {k: np.concatenate(v) for k, v in cols.items()})


def hybrid_data(out):
    cell = preset("lfp_graphite")
    ocp = default_ocp("lfp")
    grid = SpatialGrid(n_r=10, n_x_p=4, n_x_s=3, n_x_n=4)
    for name, seed, soc0 in (("drive_a", 1, 0.85), ("drive_b", 2, 0.8), ("drive_c", 3, 0.75)):
        prof = drive_cycle(cell.capacity, 3 * 3600.0, 5.0, seed=seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ExtrapolationWarning)
            exp, _ = synthetic_experiment(cell, ocp, prof, soc0, grid, seed=seed)
        exp.to_csv(out / f"{name}.csv")


def main(argv):
    out = Path(argv[1] if len(argv) > 1 else "configs/data")
    out.mkdir(parents=True, exist_ok=True)
    identification_data(out)
    soh_data(out)
    hybrid_data(out)
    print(f"wrote example data to {out}")


if __name__ == "__main__":
    main(sys.argv)
