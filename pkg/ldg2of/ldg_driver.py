#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import argparse
import json
import logging
from logging.handlers import SysLogHandler
import os
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import yaml

from ldg2of.analysis.expansion import run_b0_expansion, run_expansion
from ldg2of.analysis.scaling import DEFAULT_LADDER, boundary_approach_fit
from ldg2of.analysis.sweep import MODES, escape_sweep, pair_sweep_configs, radius_sweep_configs, write_csv
from ldg2of.common.errors import (EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_ANALYSIS, EXIT_NO_CONVERGENCE,
                                  InvalidEscapeConfig, LdgError, NoConvergence, StepUnderflow)
from ldg2of.common.types import DomainDescriptor, EscapeConfig, FlowConfig, MaterialParams, RunManifest
from ldg2of.conformal.construct import (KAPPA_PLANAR, b0_conformal_cfield, boundary_angle_of, conformal_field,
                                        field_boundary_degree, mixed_conformal_field, vertical_lift)
from ldg2of.energy.b0 import b0_corrected_minimizer, q_from_cfield
from ldg2of.energy.functionals import corrected_minimizer, ldg_energy, limit_energy
from ldg2of.grid.domain import make_grid
from ldg2of.grid.fieldio import read_field, write_field, write_sidecar
from ldg2of.grid.fields import DirectorField
from ldg2of.render.schlieren import MAX_UNDEFINED_FRACTION, render, write_png
from ldg2of.solvers.flows import ldg_gradient_flow

COMMANDS = ("conformal", "minimize", "verify-expansion", "sweep", "schlieren")
LOG_FORMAT = '%(asctime)s - [%(levelname)-4.4s] - [%(threadName)-7.7s] - [%(name)-20.20s] - %(message)s'


class UsageError(LdgError):
    pass


def code_version() -> str:
    try:
        return metadata.version("ldg2of")
    except metadata.PackageNotFoundError:
        return "unknown"


def parse_points(text):
    """'x,y;x,y' -> [(x, y), ...]; an empty string gives no points."""
    if text is None or isinstance(text, (list, tuple)):
        return [tuple(float(v) for v in p) for p in (text or [])]
    points = []
    for item in str(text).split(";"):
        item = item.strip()
        if not item:
            continue
        try:
            x, y = (float(v) for v in item.split(","))
        except ValueError:
            raise InvalidEscapeConfig(f"cannot parse escape point '{item}', expected x,y")
        points.append((x, y))
    return points


def parse_floats(text, name: str):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name} needs comma separated numbers, got '{text}'")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default=None,
        help="""Path to YAML config file. Values in the 'common' section and in the section named
            after the command are used as defaults.""")
    common.add_argument('--syslog', action='store_true', help='Write logs to syslog instead of stdout')
    group = common.add_mutually_exclusive_group()
    group.add_argument('-v', '--verbose', action='store_true', help="""Verbose output.""")
    group.add_argument('-q', '--quiet', action='store_true', help="""Reduce output.""")

    common.add_argument('--domain', choices=("disk", "square", "ellipse"), default="disk",
        help="""Domain shape (default: %(default)s).""")
    common.add_argument('--rx', type=float, default=1.0, help="""Ellipse semi-axis along x (default: %(default)s).""")
    common.add_argument('--ry', type=float, default=1.0, help="""Ellipse semi-axis along y (default: %(default)s).""")
    common.add_argument('--grid', type=int, default=128,
        help="""Grid resolution, nodes per unit length (default: %(default)s).""")
    common.add_argument('--a2', type=float, default=1.0, help="""Bulk coefficient a^2 (default: %(default)s).""")
    common.add_argument('--b2', type=float, default=1.0, help="""Bulk coefficient b^2 (default: %(default)s).""")
    common.add_argument('--c2', type=float, default=1.0, help="""Bulk coefficient c^2 (default: %(default)s).""")
    return common


def _escape_arguments(parser):
    parser.add_argument('--m', type=int, default=1, help="""Degree of the boundary data (default: %(default)s).""")
    parser.add_argument('--escape', type=str, default="0,0",
        help="""Escape points 'x,y;x,y', one per unit of |m| (default: %(default)s).""")
    parser.add_argument('--alpha', type=float, default=0.0, help="""Global phase (default: %(default)s).""")
    parser.add_argument('--orientation', choices=("north", "south"), default="north",
        help="""Sign of n3 at the escape points (default: %(default)s).""")


def _b0_arguments(parser):
    parser.add_argument('--k', type=int, default=1,
        help="""Q-level degree of the b2 = 0 boundary data (default: %(default)s).""")
    parser.add_argument('--kappa', type=float, default=KAPPA_PLANAR,
        help="""Boundary modulus of the b2 = 0 c-field (default: sqrt(3), planar uniaxial data).""")


def _flow_arguments(parser):
    parser.add_argument('--step-policy', choices=("fixed", "adaptive"), default="adaptive",
        help="""Step size policy (default: %(default)s).""")
    parser.add_argument('--tau', type=float, default=None, help="""Initial step size (default: stability bound).""")
    parser.add_argument('--max-iterations', type=int, default=20000,
        help="""Accepted step budget (default: %(default)s).""")
    parser.add_argument('--energy-tol', type=float, default=1e-10,
        help="""Relative energy decrease over the window that ends a solve (default: %(default)s).""")
    parser.add_argument('--window', type=int, default=100, help="""Energy window in steps (default: %(default)s).""")
    parser.add_argument('--residual-rtol', type=float, default=1e-6,
        help="""Residual reduction that ends a solve (default: %(default)s).""")
    parser.add_argument('--flow-time', type=float, default=None,
        help="""Pseudo-time an LdG solve may cover; raises the step budget to flow_time / tau_max
        (default: none, verify-expansion uses its ladder default).""")
    parser.add_argument('--init', choices=("corrected", "uniaxial", "lift", "input"), default="corrected",
        help="""Initial field (default: %(default)s).""")
    parser.add_argument('--checkpoint', type=str, default=None, help="""Checkpoint field file.""")
    parser.add_argument('--checkpoint-every', type=int, default=100,
        help="""Steps between checkpoints (default: %(default)s).""")


def build_parser():
    msg = """
Numerical companion for the Landau-de Gennes model of planar nematic films with
the one-constant elastic energy. Conformal director fields are built from escape
points, LdG minimizers are computed by gradient flow and the O(eps^2) correction
to the energy is measured on a ladder of eps values.

Every output file gets a <name>.meta.json sidecar with the full parameter set.
Exit codes: 0 success, 2 usage or validation, 3 I/O, 4 solver failure, 5 analysis failure.
"""
    common = _common_parser()
    parser = argparse.ArgumentParser(
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Conformal director fields and Landau-de Gennes energy expansions.",
        epilog=msg)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("conformal", parents=[common], help="Build a conformal director field.")
    _escape_arguments(p)
    p.add_argument('--poles', type=str, default=None,
        help="""Mixed field: points with n = -e3; --escape then lists the points with n = e3.""")
    p.add_argument('--q-out', type=str, default=None, help="""Also write the uniaxial Q field.""")
    p.add_argument('--out', type=str, required=False, default=None, help="""Director field file.""")
    subs["conformal"] = p

    p = sub.add_parser("minimize", parents=[common], help="Minimize the LdG energy for one eps.")
    _escape_arguments(p)
    _b0_arguments(p)
    _flow_arguments(p)
    p.add_argument('--eps', type=float, default=0.1, help="""Elastic scale eps (default: %(default)s).""")
    p.add_argument('--input', type=str, default=None, help="""Initial field file for --init input.""")
    p.add_argument('--report', type=str, default=None, help="""Report JSON (default: <out>.report.json).""")
    p.add_argument('--out', type=str, default=None, help="""Q field file.""")
    subs["minimize"] = p

    p = sub.add_parser("verify-expansion", parents=[common], help="Run the eps ladder and check the expansion.")
    _escape_arguments(p)
    _b0_arguments(p)
    _flow_arguments(p)
    p.add_argument('--eps-list', type=str, default=",".join(repr(e) for e in DEFAULT_LADDER),
        help="""Decreasing eps values (default: %(default)s).""")
    p.add_argument('--boundary', choices=("conformal", "control"), default="conformal",
        help="""Boundary data: conformal, or the non-conformal control (default: %(default)s).""")
    p.add_argument('--warm-start', dest='warm_start', action='store_true', default=True,
        help="""Start each solve from the previous minimizer (default).""")
    p.add_argument('--cold-start', dest='warm_start', action='store_false',
        help="""Start each solve from the --init field.""")
    p.add_argument('--report', type=str, default=None, help="""Report JSON file.""")
    subs["verify-expansion"] = p

    p = sub.add_parser("sweep", parents=[common], help="Sweep escape-point configurations.")
    _flow_arguments(p)
    p.add_argument('--radius-range', type=str, default=None,
        help="""start,stop,step of a single escape point moving along the x axis.""")
    p.add_argument('--pairs', type=str, default=None, help="""Separations of m = 2 point pairs.""")
    p.add_argument('--configs', type=str, default=None,
        help="""YAML file with a list of {m, points, alpha, orientation} entries.""")
    p.add_argument('--mode', choices=MODES, default="formula", help="""Sweep mode (default: %(default)s).""")
    p.add_argument('--eps-list', type=str, default=",".join(repr(e) for e in DEFAULT_LADDER),
        help="""eps ladder for --mode full-solve (default: %(default)s).""")
    p.add_argument('--out', type=str, default=None, help="""CSV file.""")
    subs["sweep"] = p

    p = sub.add_parser("schlieren", parents=[common], help="Render a crossed-polarizer texture.")
    p.add_argument('--input', type=str, default=None, help="""Director or Q field file.""")
    p.add_argument('--colormap', choices=("gray", "hue"), default="gray",
        help="""gray: Schlieren intensity, hue: planar angle (default: %(default)s).""")
    p.add_argument('--out', type=str, default=None, help="""PNG file.""")
    subs["schlieren"] = p
    return parser, subs


def _command_of(argv):
    for a in argv:
        if a in COMMANDS:
            return a
    return None


def parse_args(argv=None):
    """Parse command line arguments, with defaults from the YAML file named by --config."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()

    # First parse only the --config argument to allow YAML defaults
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('--config', type=str, default=None)
    preliminary = pre.parse_known_args(argv)[0]
    command = _command_of(argv)

    if preliminary.config and command:
        try:
            with open(preliminary.config, 'r', encoding='utf-8') as f:
                cfg = yaml.safe_load(f) or {}
        except FileNotFoundError:
            print(f"Config file not found: {preliminary.config}", file=sys.stderr)
            sys.exit(EXIT_IO)
        except Exception as e:
            print(f"Error loading config file {preliminary.config}: {e}", file=sys.stderr)
            sys.exit(EXIT_IO)
        if not isinstance(cfg, dict):
            print(f"Config file {preliminary.config} must hold a mapping of sections", file=sys.stderr)
            sys.exit(EXIT_USAGE)

        sub = subs[command]
        known = {action.dest for action in sub._actions}
        yaml_defaults = dict(cfg.get('common') or {})
        yaml_defaults.update(cfg.get(command) or {})
        unknown = sorted(k for k in yaml_defaults if k.replace('-', '_') not in known)
        if unknown:
            print(f"Unknown keys for '{command}' in {preliminary.config}: {', '.join(unknown)}", file=sys.stderr)
            sys.exit(EXIT_USAGE)

        # Apply YAML defaults where CLI didn't explicitly set a value
        for key, val in yaml_defaults.items():
            dest = key.replace('-', '_')
            argname = f"--{dest.replace('_', '-')}"
            if not any(a == argname or a.startswith(argname + "=") for a in argv):
                sub.set_defaults(**{dest: val})

    return parser.parse_args(argv)


def configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    if args.syslog:
        # Prefer Unix domain socket /dev/log, otherwise fall back to UDP localhost:514
        address = "/dev/log" if os.path.exists("/dev/log") else ("localhost", 514)
        try:
            handler = SysLogHandler(address=address, facility=SysLogHandler.LOG_LOCAL0)
            logging.basicConfig(level=level, handlers=[handler],
                format='ldg2of: %(levelname)s - %(threadName)s - %(name)s - %(message)s')
            return
        except Exception:
            pass
    logging.basicConfig(level=level, format=LOG_FORMAT)


# Helpers shared by the commands

def _grid(args):
    return make_grid(DomainDescriptor(kind=args.domain, rx=args.rx, ry=args.ry), args.grid)


def _material(args, eps: float = 0.1) -> MaterialParams:
    return MaterialParams(a2=args.a2, b2=args.b2, c2=args.c2, eps=eps)


def _escape(args) -> EscapeConfig:
    return EscapeConfig(m=args.m, points=parse_points(args.escape), alpha=args.alpha, orientation=args.orientation)


def _flow(args) -> FlowConfig:
    return FlowConfig(step_policy=args.step_policy, tau=args.tau, max_iterations=args.max_iterations,
                      energy_tol=args.energy_tol, window=args.window, residual_rtol=args.residual_rtol,
                      initializer=args.init, flow_time=args.flow_time, checkpoint=args.checkpoint,
                      checkpoint_every=args.checkpoint_every)


def _require(args, name: str) -> str:
    value = getattr(args, name)
    if not value:
        raise UsageError(f"--{name.replace('_', '-')} is required for '{args.command}'")
    return value


def _manifest(args, grid=None, material=None) -> RunManifest:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose", "quiet", "syslog")}
    return RunManifest(command=args.command, parameters=params,
                       domain=None if grid is None else grid.descriptor,
                       resolution=None if grid is None else grid.resolution,
                       material=material, code_version=code_version())


def _write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    return path


# Commands

def cmd_conformal(args, start: float) -> int:
    logger = logging.getLogger(__name__)
    out = _require(args, "out")
    grid = _grid(args)
    if args.poles is not None:
        n = mixed_conformal_field(parse_points(args.escape), parse_points(args.poles), args.alpha, grid)
    else:
        n = conformal_field(_escape(args), grid)

    manifest = _manifest(args, grid)
    manifest.outputs.append(out)
    manifest.results["boundary_degree"] = field_boundary_degree(n)
    manifest.results["escape_nodes"] = [[int(r), int(c)] for r, c in zip(*((np.abs(n.values[..., 2]) > 1.0 - 1e-12)
                                                                           & grid.active).nonzero())]
    if args.q_out:
        manifest.outputs.append(args.q_out)
        write_field(args.q_out, n.to_q(_material(args).s_plus))
    manifest.wall_time = time.perf_counter() - start
    write_field(out, n, manifest)
    if args.q_out:
        write_sidecar(args.q_out, manifest)
    logger.info(f"Conformal field with boundary degree {manifest.results['boundary_degree']} written to {out}")
    return EXIT_OK


def cmd_minimize(args, start: float) -> int:
    logger = logging.getLogger(__name__)
    out = _require(args, "out")
    grid = _grid(args)
    params = _material(args, args.eps)
    cfg = _flow(args)

    if params.b2 == 0.0:
        limit = b0_conformal_cfield(args.k, parse_points(args.escape), grid, args.kappa)
        inits = {"corrected": lambda: b0_corrected_minimizer(limit, params),
                 "uniaxial": lambda: q_from_cfield(limit, params)}
        reference = 0.5 * grid.dirichlet_energy(q_from_cfield(limit, params).values)
    else:
        escape = _escape(args)
        limit = conformal_field(escape, grid)
        inits = {"corrected": lambda: corrected_minimizer(limit, params),
                 "uniaxial": lambda: limit.to_q(params.s_plus),
                 "lift": lambda: vertical_lift(grid, boundary_angle_of(escape, grid),
                                               escape.orientation).to_q(params.s_plus)}
        reference = limit_energy(limit, params)

    if args.init == "input":
        initial = read_field(_require(args, "input"))
        if isinstance(initial, DirectorField):
            initial = initial.to_q(params.s_plus)
        if initial.grid.shape != grid.shape:
            raise UsageError(f"--input grid {initial.grid.shape} does not match --grid {args.grid}")
    elif args.init in inits:
        initial = inits[args.init]()
    else:
        raise UsageError(f"--init {args.init} is not available with b2 = 0")

    report_path = args.report or str(Path(out).with_suffix(".report.json"))
    manifest = _manifest(args, grid, params)
    manifest.inputs = [args.input] if args.init == "input" else []
    manifest.outputs = [out, report_path]
    status = EXIT_OK
    try:
        q, solve = ldg_gradient_flow(initial, params, cfg)
    except (NoConvergence, StepUnderflow) as e:
        logger.error(f"{e}; writing the partial result")
        q, solve = e.result, e.report
        status = EXIT_NO_CONVERGENCE

    energy = ldg_energy(q, params, reference=reference)
    manifest.wall_time = time.perf_counter() - start
    manifest.results = {"converged": solve.converged, "energy": energy.to_dict(), "status": solve.status}
    write_field(out, q, manifest)
    _write_json(report_path, {"solve": solve.to_dict(), "energy": energy.to_dict(), "converged": solve.converged})
    logger.info(f"E_eps = {energy.total:.12g} (renormalized {energy.renormalized:.6g}) written to {out}")
    return status


def _ladder_report(args, grid, params, report, start: float):
    print(f"{'check':<28} {'value':>14} {'target':>14}  result")
    for check in report.checks:
        target = "" if check.target is None else f"{check.target:.6g}"
        print(f"{check.name:<28} {check.value:>14.6g} {target:>14}  {'PASS' if check.passed else 'FAIL'}")

    if args.report:
        manifest = _manifest(args, grid, params)
        manifest.outputs.append(args.report)
        manifest.wall_time = time.perf_counter() - start
        manifest.results = {"passed": report.passed, "completed": len(report.eps)}
        _write_json(args.report, report.to_dict())
        write_sidecar(args.report, manifest)


def cmd_verify_expansion(args, start: float) -> int:
    logger = logging.getLogger(__name__)
    grid = _grid(args)
    params = _material(args)
    eps_list = parse_floats(args.eps_list, "eps-list")
    flow = _flow(args)
    try:
        if params.b2 == 0.0:
            points = parse_points(args.escape)
            result = run_b0_expansion(grid, params, k=args.k, points=points if len(points) == abs(args.k) else None,
                                      eps_list=eps_list, flow=flow, kappa=args.kappa, warm_start=args.warm_start)
        else:
            escape = None if args.boundary == "control" else _escape(args)
            result = run_expansion(grid, params, escape, eps_list, flow, boundary=args.boundary,
                                   warm_start=args.warm_start)
    except LdgError as e:
        ladder = getattr(e, "ladder", None)
        if ladder is None:
            raise
        logger.error(f"ladder stopped after {len(ladder.report.eps)} of {len(eps_list)} eps values: {e}")
        _ladder_report(args, grid, params, ladder.report, start)
        return e.exit_code

    _ladder_report(args, grid, params, result.report, start)
    return EXIT_OK if result.report.passed else EXIT_ANALYSIS


def _sweep_configs(args):
    if args.configs:
        with open(args.configs, "r", encoding="utf-8") as f:
            entries = yaml.safe_load(f) or []
        return [EscapeConfig(m=int(e["m"]), points=parse_points(e.get("points")), alpha=float(e.get("alpha", 0.0)),
                             orientation=e.get("orientation", "north")) for e in entries], False
    if args.pairs:
        return pair_sweep_configs(parse_floats(args.pairs, "pairs")), False
    radius = parse_floats(args.radius_range or "0,0.8,0.1", "radius-range")
    if len(radius) != 3:
        raise UsageError("--radius-range needs start,stop,step")
    return radius_sweep_configs(*radius), True


def cmd_sweep(args, start: float) -> int:
    logger = logging.getLogger(__name__)
    out = _require(args, "out")
    grid = _grid(args)
    params = _material(args)
    configs, radial = _sweep_configs(args)
    eps_list = parse_floats(args.eps_list, "eps-list") if args.mode == "full-solve" else []
    rows = escape_sweep(configs, grid, params, args.mode, eps_list or None, _flow(args))
    write_csv(rows, out, eps_list)

    manifest = _manifest(args, grid, params)
    manifest.inputs = [args.configs] if args.configs else []
    manifest.outputs.append(out)
    if radial and len(rows) >= 4:
        radii = [abs(complex(*cfg.points[0])) for cfg in configs]
        fit = boundary_approach_fit(radii, [row.W_ldg for row in rows])
        manifest.results["boundary_approach"] = fit.to_dict()
        logger.info(f"|W_LdG| grows like delta^{fit.exponent:.3f} towards the boundary")
    manifest.wall_time = time.perf_counter() - start
    write_sidecar(out, manifest)
    return EXIT_OK


def cmd_schlieren(args, start: float) -> int:
    logger = logging.getLogger(__name__)
    source = _require(args, "input")
    out = _require(args, "out")
    fld = read_field(source)
    texture = render(fld, args.colormap)
    write_png(out, texture)

    manifest = _manifest(args, fld.grid)
    manifest.inputs.append(source)
    manifest.outputs.append(out)
    manifest.results = {"undefined_pixels": texture.undefined, "undefined_fraction": texture.undefined_fraction}
    manifest.wall_time = time.perf_counter() - start
    write_sidecar(out, manifest)
    if texture.undefined_fraction > MAX_UNDEFINED_FRACTION:
        logger.error(f"{texture.undefined_fraction:.2%} of the pixels have no planar angle")
        return EXIT_USAGE
    return EXIT_OK


HANDLERS = {
    "conformal": cmd_conformal,
    "minimize": cmd_minimize,
    "verify-expansion": cmd_verify_expansion,
    "sweep": cmd_sweep,
    "schlieren": cmd_schlieren,
}


def run(argv=None) -> int:
    args = parse_args(argv)
    configure_logging(args)
    logger = logging.getLogger(__name__)
    start = time.perf_counter()
    try:
        return HANDLERS[args.command](args, start)
    except LdgError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"{args.command}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"{args.command}: {e}", file=sys.stderr)
        return EXIT_IO


def main():
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        print("Exiting...")
        sys.exit(1)


if __name__ == "__main__":
    main()
