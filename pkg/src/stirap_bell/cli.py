"""Command-line entry point.

Exit status: 0 on success, 1 for configuration (or output path) errors,
2 when the integrator reports a non-physical state. Errors are reported
on stderr as one logfmt line, e.g.::

    error=config key=params.gamma reason="must be >= 0"
"""

from __future__ import annotations

import argparse
import sys

from .config import config_from_dict, read_config_dict
from .dynamics import IntegrationError
from .experiments import run_experiment
from .model import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INTEGRATION = 2

PARAM_FLAGS = ("g", "delta", "ramp", "gamma", "epsilon")


def _range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError("sweep-range", "expected START:STOP:COUNT")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError("sweep-range", "expected START:STOP:COUNT") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML experiment configuration")
    for name in PARAM_FLAGS:
        common.add_argument(f"--{name}", type=str, metavar="RATE")
    common.add_argument("--frame", choices=("rwa", "lab"))
    common.add_argument("--noise", choices=("super", "lab", "none"))
    common.add_argument("--out", metavar="PATH", help="directory for output artifacts")
    common.add_argument("--jobs", type=str, metavar="N", help="sweep worker processes")
    common.add_argument("--no-plot", action="store_true", help="skip PNG rendering")

    parser = argparse.ArgumentParser(
        prog="stirap-bell",
        description="Adiabatic photon-to-atom transfer and two-node entanglement simulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("single", parents=[common], help="single-node transfer trajectory")
    sub.add_parser("network", parents=[common], help="two-node Bell-state generation")
    sw = sub.add_parser("sweep", parents=[common], help="gamma or ramp-rate sweep")
    sw.add_argument("--sweep-var", choices=("gamma", "ramp"))
    sw.add_argument("--sweep-range", metavar="START:STOP:COUNT")
    sub.add_parser("formulas", parents=[common], help="closed-form report")
    return parser


def _overlay(args: argparse.Namespace) -> dict:
    data = read_config_dict(args.config) if args.config else {}
    if args.command == "sweep":
        var = args.sweep_var
        if var is None:
            mode = data.get("mode")
            var = mode.split("-", 1)[1] if mode in ("sweep-gamma", "sweep-ramp") else "gamma"
        if data.get("mode") not in (None, f"sweep-{var}"):
            data.pop("sweep", None)
        data["mode"] = f"sweep-{var}"
        if args.sweep_range:
            start, stop, count = _range(args.sweep_range)
            sweep = {k: v for k, v in dict(data.get("sweep") or {}).items() if k != "values"}
            sweep.update(start=start, stop=stop, count=count)
            data["sweep"] = sweep
    else:
        if data.get("mode") not in (None, args.command):
            data.pop("sweep", None)
            data.pop("right", None) if args.command != "network" else None
        data["mode"] = args.command
    params = dict(data.get("params") or {})
    for name in PARAM_FLAGS:
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    if args.frame:
        params["frame"] = args.frame
    if args.noise:
        params["noise"] = args.noise
    if params:
        data["params"] = params
    if args.out:
        data["output_path"] = args.out
    if args.jobs is not None:
        data["jobs"] = args.jobs
    if args.no_plot:
        data["plot"] = False
    return data


def _fail(kind: str, reason: str, key: str | None = None) -> None:
    reason = " ".join(str(reason).split()).replace('"', "'")
    parts = [f"error={kind}"]
    if key:
        parts.append(f"key={key}")
    parts.append(f'reason="{reason}"')
    print(" ".join(parts), file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_dict(_overlay(args))
        run_experiment(cfg)
    except ConfigError as exc:
        _fail("config", str(exc).split(": ", 1)[-1], exc.key)
        return EXIT_CONFIG
    except IntegrationError as exc:
        _fail("integration", f"at t={exc.time:.6g}: {exc.reason}")
        return EXIT_INTEGRATION
    except OSError as exc:
        _fail("output", f"{exc.filename}: {exc.strerror}")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
