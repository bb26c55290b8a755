"""Regenerate the shipped OCP tables from the reference curves."""

from pathlib import Path

from batwb.ocp import reference_tables

out = Path(__file__).resolve().parents[1] / "src" / "batwb" / "data"
for name, table in reference_tables().items():
    table.to_csv(out / f"ocp_{name}.csv")
    print("wrote", out / f"ocp_{name}.csv")
