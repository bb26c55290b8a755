"""Command-line front end: ``batwb <command> [options]``.

Exit codes: 0 success, 2 validation failure (configuration or input data),
3 runtime failure. A failed run leaves ``error.json`` in the output
directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path

from .errors import ConfigError, DataError, DomainError
from .workbench import CONFIG_ENV, atomic_write_text, load_config, run

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3
log = logging.getLogger("batwb")


def _window(text):
    """``LENGTH`` or ``OFFSET,LENGTH`` in seconds."""
    parts = [float(x) for x in text.replace(":", ",").split(",")]
    if len(parts) == 1:
        return (0.0, parts[0])
    if len(parts) == 2:
        return tuple(parts)
    raise argparse.ArgumentTypeError("expected LENGTH or OFFSET,LENGTH")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help=f"YAML config (default: ${CONFIG_ENV})")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="root seed (overrides the config)")
    common.add_argument("--log-level", default=argparse.SUPPRESS,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    p = argparse.ArgumentParser(prog="batwb", parents=[common],
                                description="Battery modeling and estimation workbench.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the physics model on a profile")
    ident = sub.add_parser("identify", parents=[common], help="parameter identification")
    ident.add_argument("--budget", type=int, help="cost evaluations")
    ident.add_argument("--workers", type=int, help="parallel processes")
    sub.add_parser("validate-config", parents=[common], help="check a config and exit")

    soh = sub.add_parser("soh", help="state-of-health estimation")
    soh_sub = soh.add_subparsers(dest="action", required=True)
    for name in ("train", "predict", "eval"):
        s = soh_sub.add_parser(name, parents=[common])
        s.add_argument("--window", type=_window, help="CC window: LENGTH or OFFSET,LENGTH [s]")
        s.add_argument("--bags", type=int, help="bagged GP members")
        s.add_argument("--data", help="cycling CSV (overrides soh.data)")
        if name != "train":
            s.add_argument("--model", help="model artifact (overrides soh.model)")

    hyb = sub.add_parser("hybrid", help="hybrid physics + ML voltage model")
    hyb_sub = hyb.add_subparsers(dest="action", required=True)
    hyb_sub.add_parser("train", parents=[common])
    hs = hyb_sub.add_parser("simulate", parents=[common])
    hs.add_argument("--model", help="model artifact (overrides hybrid.model)")
    return p


def _write_error(out_dir, kind, exc, code):
    if out_dir is None:
        return
    try:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        doc = {"status": "error", "exit_code": code, "kind": kind,
               "type": type(exc).__name__, "message": str(exc)}
        atomic_write_text(Path(out_dir) / "error.json", json.dumps(doc, indent=2, sort_keys=True))
    except OSError:
        log.error("could not write error record to %s", out_dir)


def _fallback_out_dir(config_path):
    """Best-effort ``output.dir`` from a config that failed validation."""
    import os

    import yaml

    path = config_path or os.environ.get(CONFIG_ENV)
    try:
        data = yaml.safe_load(Path(path).read_text())
        rel = Path(data["output"]["dir"])
    except Exception:  # noqa: BLE001  (unreadable config: no error record location)
        return None
    return rel if rel.is_absolute() else Path(path).parent / rel


def _out_dir(args, cfg):
    if getattr(args, "out", None):
        return Path(args.out)
    if cfg is not None and "dir" in cfg.section("output"):
        return cfg.path(cfg.section("output")["dir"])
    return Path("batwb_out")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(args, "log_level", "WARNING"),
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    cfg = None
    out_dir = Path(args.out) if getattr(args, "out", None) else None
    try:
        cfg = load_config(getattr(args, "config", None))
        out_dir = _out_dir(args, cfg)
        if args.command == "validate-config":
            print("configuration valid")
            return EXIT_OK
        opts = {k: getattr(args, k) for k in ("budget", "workers", "window", "bags", "data",
                                              "model") if getattr(args, k, None) is not None}
        outputs = run(args.command, cfg, out_dir, getattr(args, "seed", None),
                      getattr(args, "action", None), opts)
        for p in outputs:
            log.info("wrote %s", p)
        return EXIT_OK
    except (ConfigError, DataError, DomainError) as exc:
        log.error("%s", exc)
        if out_dir is None and cfg is None:
            out_dir = _fallback_out_dir(getattr(args, "config", None))
        _write_error(out_dir, "validation", exc, EXIT_VALIDATION)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001  (any other failure is a runtime error)
        log.error("%s", exc)
        log.debug("%s", traceback.format_exc())
        _write_error(out_dir, "runtime", exc, EXIT_RUNTIME)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
