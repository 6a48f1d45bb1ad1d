"""Command line entry point ``fwn``.

Subcommands
-----------
verify    run a randomized identity suite and exit 0 iff every residual is within tolerance
analyze   evaluate the implementability criteria over a ladder of cutoffs
matelem   print one gauge matrix element by closed form and by quadrature
spectrum  print the lowest positive-energy eigenvalues with their mode labels

``--config`` takes a JSON file path or one of the preset names
``massive1d``, ``massless1d``, ``massive3d``, ``massless3d``.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
import time
from dataclasses import dataclass

import jsonschema

from . import analyzer, suites
from .oneparticle import (
    GaugeFunction,
    ModeIndex,
    Scenario,
    build_model,
    gauge_matrix_element,
    gauge_matrix_element_quadrature,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
SUITES = ("algebra", "operators", "implementer")
DEFAULT_TOL = 1e-9

_NUM = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario", "gauge"],
    "properties": {
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "required": ["torus_dim", "mass"],
            "properties": {
                "torus_dim": {"enum": [1, 3]},
                "mass": {"type": "number", "minimum": 0},
                "shift_c": _NUM,
                "mode_cutoff": {"type": "integer", "minimum": 1},
            },
        },
        "gauge": {
            "type": "object",
            "additionalProperties": False,
            "required": ["coefficients"],
            "properties": {
                "coefficients": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["gamma", "re"],
                        "properties": {
                            "gamma": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                            "re": _NUM,
                            "im": _NUM,
                        },
                    },
                }
            },
        },
        "fock": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"max_particles": {"type": "integer", "minimum": 1}},
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p_values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "ladder": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 4},
                "rel_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


def _cos_coefficients(torus_dim: int) -> list:
    g = [1] if torus_dim == 1 else [0, 1, 0]
    return [{"gamma": g, "re": 0.5, "im": 0.0}, {"gamma": [-a for a in g], "re": 0.5, "im": 0.0}]


def _preset(torus_dim: int, mass: float) -> dict:
    return {
        "scenario": {"torus_dim": torus_dim, "mass": mass, "shift_c": 2.0, "mode_cutoff": 8 if torus_dim == 1 else 3},
        "gauge": {"coefficients": _cos_coefficients(torus_dim)},
        "fock": {"max_particles": 4},
        "analysis": {
            "p_values": list(analyzer.DEFAULT_P_GRID),
            "ladder": list(analyzer.DEFAULT_LADDERS[torus_dim]),
            "rel_tol": analyzer.DEFAULT_REL_TOL,
        },
        "verify": {"seed": 0, "tol": DEFAULT_TOL},
    }


PRESETS = {
    "massive1d": _preset(1, 2.0),
    "massless1d": _preset(1, 0.0),
    "massive3d": _preset(3, 2.0),
    "massless3d": _preset(3, 0.0),
}


class ConfigError(Exception):
    """Invalid, unreadable or inconsistent configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with defaults filled in."""

    raw: dict
    scenario: Scenario
    gauge: GaugeFunction
    max_particles: int
    p_values: tuple
    ladder: tuple
    rel_tol: float
    seed: int
    tol: float


def parse_config(raw: dict) -> RunConfig:
    """Validate a config mapping against the schema and build domain objects.

    Raises
    ------
    ConfigError
        Schema violations and domain-level inconsistencies.
    """
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    filled = copy.deepcopy(raw)
    sc = filled["scenario"]
    d = sc["torus_dim"]
    sc.setdefault("shift_c", 2.0)
    sc.setdefault("mode_cutoff", 8 if d == 1 else 3)
    filled.setdefault("fock", {}).setdefault("max_particles", 4)
    an = filled.setdefault("analysis", {})
    an.setdefault("p_values", list(analyzer.DEFAULT_P_GRID))
    an.setdefault("ladder", list(analyzer.DEFAULT_LADDERS[d]))
    an.setdefault("rel_tol", analyzer.DEFAULT_REL_TOL)
    ver = filled.setdefault("verify", {})
    ver.setdefault("seed", 0)
    ver.setdefault("tol", DEFAULT_TOL)
    if any(b <= a for a, b in zip(an["ladder"], an["ladder"][1:])):
        raise ConfigError("analysis/ladder: cutoffs must be strictly increasing")
    try:
        scenario = Scenario(d, float(sc["mass"]), float(sc["shift_c"]), int(sc["mode_cutoff"]))
        fourier = {}
        for entry in filled["gauge"]["coefficients"]:
            key = tuple(entry["gamma"])
            if key in fourier:
                raise ValueError(f"duplicate frequency {list(key)}")
            fourier[key] = complex(entry["re"], entry.get("im", 0.0))
        gauge = GaugeFunction(fourier, d)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(filled, scenario, gauge, int(filled["fock"]["max_particles"]),
                     tuple(float(p) for p in an["p_values"]), tuple(int(x) for x in an["ladder"]),
                     float(an["rel_tol"]), int(ver["seed"]), float(ver["tol"]))


def load_config(source: str) -> RunConfig:
    """Read a config file, or a preset when ``source`` names one and no such file exists."""
    if source in PRESETS and not os.path.exists(source):
        return parse_config(copy.deepcopy(PRESETS[source]))
    try:
        with open(source, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {source}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source} is not valid JSON: {exc}") from None
    return parse_config(raw)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def run_suite(cfg: RunConfig, suite: str, seed: int) -> dict:
    """Residual maxima of one suite."""
    if suite == "algebra":
        return suites.algebra_suite(seed)
    if suite == "operators":
        out = {f"car.{k}": v for k, v in suites.car_suite(seed).items()}
        out.update({f"kernel.{k}": v for k, v in suites.operators_suite(seed).items()})
        return out
    if suite == "implementer":
        try:
            return suites.implementer_suite(cfg.scenario, cfg.gauge, seed, cfg.max_particles)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown suite {suite!r}")


def cmd_verify(cfg: RunConfig, suite: str, seed: int | None, tol: float | None, timings: bool = False) -> tuple[int, dict]:
    seed = cfg.seed if seed is None else seed
    tol = cfg.tol if tol is None else tol
    start = time.perf_counter()
    residuals = run_suite(cfg, suite, seed)
    passed = all(v <= tol for v in residuals.values())
    report = {
        "command": "verify",
        "config": cfg.raw,
        "suite": suite,
        "seed": seed,
        "tol": tol,
        "residuals": residuals,
        "max_residual": max(residuals.values(), default=0.0),
        "passed": passed,
    }
    if timings:
        report["timings"] = {"seconds": time.perf_counter() - start}
    return (EXIT_OK if passed else EXIT_FAIL), report


def cmd_analyze(cfg: RunConfig, workers: int = 1, timings: bool = False) -> tuple[dict, list]:
    start = time.perf_counter()
    rep = analyzer.scenario_report(cfg.scenario, cfg.gauge, cfg.p_values, cfg.ladder, cfg.rel_tol, workers)
    report = {"command": "analyze", "config": cfg.raw, "analysis": rep.to_dict()}
    if timings:
        report["timings"] = {"seconds": time.perf_counter() - start}
    return report, rep.csv_rows()


def _parse_momentum(text: str, torus_dim: int) -> tuple:
    try:
        values = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"momentum {text!r} is not a comma-separated integer list") from None
    if len(values) != torus_dim:
        raise ConfigError(f"momentum {text!r} needs {torus_dim} component(s)")
    return values


def cmd_matelem(cfg: RunConfig, alpha_out: str, alpha_in: str, s: str, t: str, block: str) -> dict:
    d = cfg.scenario.torus_dim
    mo, mi = _parse_momentum(alpha_out, d), _parse_momentum(alpha_in, d)
    cutoff = cfg.scenario.mode_cutoff
    for mom in (mo, mi):
        if max(abs(a) for a in mom) > cutoff:
            raise ConfigError(f"momentum {list(mom)} lies outside the mode cutoff {cutoff}")
    model = build_model(cfg.scenario)
    out_mode, in_mode = ModeIndex(mo, s), ModeIndex(mi, t)
    closed = gauge_matrix_element(model, cfg.gauge, out_mode, in_mode, block)
    quad = gauge_matrix_element_quadrature(model, cfg.gauge, out_mode, in_mode, block)
    return {
        "block": block,
        "out": {"momentum": list(mo), "internal": s},
        "in": {"momentum": list(mi), "internal": t},
        "closed_form": [closed.real, closed.imag],
        "quadrature": [quad.real, quad.imag],
        "abs_difference": abs(closed - quad),
    }


def cmd_spectrum(cfg: RunConfig, count: int) -> str:
    model = build_model(cfg.scenario)
    lines = [f"{'index':>5}  {'momentum':<14} {'s':>1}  {'energy':>12}  {'eigenvalue':>12}"]
    for k in range(min(count, model.n_modes)):
        mode = model.positive_modes[k]
        mom = ",".join(str(a) for a in mode.momentum)
        lines.append(f"{k:>5}  ({mom}){'':<{12 - len(mom)}} {mode.internal:>1}  "
                     f"{model.energies[k]:>12.9f}  {model.eigenvalues[k]:>12.9f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fwn", description="Fermionic Fock-space implementability toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run an identity suite")
    p.add_argument("--config", required=True)
    p.add_argument("--suite", required=True, choices=SUITES)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--timings", action="store_true", help="include wall-clock timings (breaks byte determinism)")

    p = sub.add_parser("analyze", help="evaluate implementability criteria")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timings", action="store_true")

    p = sub.add_parser("matelem", help="print one gauge matrix element")
    p.add_argument("--config", required=True)
    p.add_argument("--alpha-out", required=True, help="comma-separated momentum")
    p.add_argument("--alpha-in", required=True)
    p.add_argument("--s", required=True, choices=["+", "-"])
    p.add_argument("--t", required=True, choices=["+", "-"])
    p.add_argument("--block", default="plus_minus_gamma", choices=["plus_minus_gamma", "plus_plus"])

    p = sub.add_parser("spectrum", help="print the lowest eigenvalues")
    p.add_argument("--config", required=True)
    p.add_argument("--count", type=int, default=10)
    return parser


def _open_for_write(path: str):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}") from None


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "verify":
            code, report = cmd_verify(cfg, args.suite, args.seed, args.tol, args.timings)
            print(_dump(report))
            return code
        if args.command == "analyze":
            out_fh = _open_for_write(args.out)
            csv_fh = _open_for_write(args.csv) if args.csv else None
            try:
                report, rows = cmd_analyze(cfg, max(1, args.workers), args.timings)
                out_fh.write(_dump(report) + "\n")
                if csv_fh is not None:
                    writer = csv.writer(csv_fh, lineterminator="\n")
                    writer.writerow(["criterion", "p", "cutoff", "partial_sum"])
                    writer.writerows((c, repr(p), k, repr(v)) for c, p, k, v in rows)
            finally:
                out_fh.close()
                if csv_fh is not None:
                    csv_fh.close()
            print(_dump({"verdicts": report["analysis"]["verdicts"], "out": args.out, "csv": args.csv}))
            return EXIT_OK
        if args.command == "matelem":
            print(_dump(cmd_matelem(cfg, args.alpha_out, args.alpha_in, args.s, args.t, args.block)))
            return EXIT_OK
        if args.command == "spectrum":
            print(cmd_spectrum(cfg, args.count))
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
