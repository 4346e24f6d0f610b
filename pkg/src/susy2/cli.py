"""Command-line front end.

``susy2 COMMAND [options]`` where COMMAND is ``transform``, ``classify``,
``spectrum``, ``verify`` or ``example N``. Settings come from a JSON config
(``--config``) or a catalog example (``--example N``); the numeric flags
override both. Exit codes: 0 success (for ``verify``/``example``: every
check passed), 1 some check failed, 2 bad configuration, 3 numeric failure
(diagnostics in ``error.json``).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import ConstraintViolation, Susy2Error
from .io import write_eigenvalues, write_grid_function, write_json
from .pipeline import COMMANDS, ConfigError, job_from_config, run_classify, run_spectrum, run_verify, transform_summary

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_OVERRIDES = (("grid_n", "grid_n"), ("eig_n", "eig_n"), ("levels", "levels"), ("trunc_L", "L"), ("tol", "tol"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="susy2", description="Second-order Darboux partners: build, classify, check spectra.")
    p.add_argument("command", nargs="?", choices=COMMANDS, help="step to run (default: the config's 'command')")
    p.add_argument("id", nargs="?", type=int, help="example id for the 'example' command")
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--example", type=int, metavar="N", help="use catalog example N instead of a config")
    p.add_argument("--out", type=Path, help="output directory (default: config 'output' or ./susy2-out)")
    p.add_argument("--grid-n", type=int, help="odd number of grid nodes")
    p.add_argument("--eig-n", type=int, help="finite-difference matrix size")
    p.add_argument("--levels", type=int, metavar="K", help="number of low-lying levels")
    p.add_argument("--trunc-L", type=float, help="truncation length on unbounded problems")
    p.add_argument("--tol", type=float, help="spectrum matching tolerance")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def load_config(args: argparse.Namespace) -> dict:
    """Merge the config file, ``--example`` and the numeric flags into one dict."""
    cfg: dict = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"{args.config}: invalid JSON: {err}") from None
        if not isinstance(cfg, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
    command = args.command or cfg.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"no valid command given (choose from {', '.join(COMMANDS)})")
    cfg["command"] = command
    example = args.id if args.id is not None else args.example
    if command == "example" and example is None and cfg.get("example") is None:
        raise ConfigError("'example' needs an id")
    if args.id is not None and command != "example":
        raise ConfigError(f"unexpected positional argument {args.id}")
    if example is not None:
        if "example" not in cfg:
            for key in ("problem", "seed_potential", "transformation"):
                cfg.pop(key, None)
        cfg["example"] = example
    numeric = dict(cfg.get("numeric") or {})
    for attr, key in _OVERRIDES:
        value = getattr(args, attr)
        if value is not None:
            numeric[key] = value
    cfg["numeric"] = numeric
    if args.out is not None:
        cfg["output"] = str(args.out)
    cfg.setdefault("output", "susy2-out")
    return cfg


def run(cfg: dict) -> int:
    """Execute one configured command, write its artifacts and return the exit code."""
    out = Path(cfg["output"])
    command = cfg["command"]
    job = job_from_config(cfg)
    if command == "transform":
        _, result = job.transform()
        write_grid_function(out / "V1.csv", result.V1)
        write_grid_function(out / "W.csv", result.W)
        write_json(out / "result.json", {"label": job.label, **transform_summary(result)})
        return EXIT_OK
    if command == "classify":
        write_json(out / "verdict.json", {"label": job.label, **run_classify(job).to_dict()})
        return EXIT_OK
    if command == "spectrum":
        spec = run_spectrum(job)
        write_json(out / "spectrum.json", {"label": job.label, **spec})
        write_eigenvalues(out / "eigenvalues.csv", spec["levels"], spec["residuals"])
        return EXIT_OK
    report = run_verify(job)
    write_json(out / "report.json", report)
    return EXIT_OK if report["passed"] else EXIT_FAILED


def _diagnostic(cfg: dict, err: Exception) -> dict:
    info = {"command": cfg.get("command"), "error": type(err).__name__, "message": str(err)}
    image = getattr(err, "image", None)
    if image is not None:
        info["image_max_abs"] = float(image.scale())
    return info


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg: dict = {}
    try:
        cfg = load_config(args)
        return run(cfg)
    except (ConfigError, ConstraintViolation) as err:
        print(f"susy2: configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (Susy2Error, ArithmeticError, ValueError) as err:
        path = write_json(Path(cfg.get("output", "susy2-out")) / "error.json", _diagnostic(cfg, err))
        print(f"susy2: numeric failure ({type(err).__name__}): {err}; see {path}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
