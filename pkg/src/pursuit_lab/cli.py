"""Command-line front end.

    pursuit-lab simulate --n 0.5 --a 1 --b 0.5 --param standard --t1 6.2832 -o run.csv
    pursuit-lab equilibrium --n 0.5 --a 1 --format json

Exit codes: 0 success (a capture is a successful outcome), 1 invalid input
or unwritable output, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    invariance_check,
    limit_cycle_detect,
    poincare_crossings,
    wrap_angle,
    zeta_ode_check,
)
from .curves import START_PARAM, EllipseShape, Vec2
from .dynsys import equilibrium_report, integrate_circle_dds, integrate_ellipse_dds
from .errors import CaptureError, IntegrationError, PursuitLabError, SingularityError
from .integrate import IntegratorSettings
from .pursuit import PursuitConfig, simulate_pursuit

log = logging.getLogger("pursuit_lab")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2

COMMANDS = ("simulate", "compare-params", "dynsys", "equilibrium", "zeta-ode", "limit-cycle")

COLUMNS = {
    "simulate": ["param", "evader_x", "evader_y", "pursuer_x", "pursuer_y", "rho", "lambda"],
    "dynsys": ["t", "rho", "zeta", "phi"],
    "compare-params": ["anchor_k", "evader_x", "evader_y", "p1_x", "p1_y", "p2_x", "p2_y",
                       "p3_x", "p3_y", "max_dev"],
    "limit-cycle": ["k", "rho", "zeta_wrapped", "gap"],
    "zeta-ode": ["theta", "zeta", "zeta_dds", "abs_diff"],
    "equilibrium": ["rho_star", "zeta_star", "class", "eig1_re", "eig1_im", "eig2_re", "eig2_im"],
}

# Defaults are the experiment constants: n=0.5, a=1, b=0.5, pursuer at the
# origin, rho(0)=1, zeta(0)=pi/2, one orbit (2*pi) or five (10*pi).
BASE_DEFAULTS = {
    "n": 0.5, "a": 1.0, "b": 0.5, "param": "standard", "t0": 0.0, "t1": 2 * math.pi,
    "step": None, "tol": 1e-9, "p0": [0.0, 0.0], "rho0": 1.0, "zeta0": math.pi / 2,
    "phi0": math.pi / 2, "output": None, "format": "csv", "svg": None,
    "capture_eps": 1e-6, "anchor_step": math.pi / 2, "dev_tol": 1e-3,
    "section": math.pi / 2, "cycle_tol": 1e-3,
}
COMMAND_DEFAULTS = {
    "dynsys": {"t1": 10 * math.pi},
    "limit-cycle": {"t1": 10 * math.pi},
}


@dataclass
class RunConfig:
    command: str
    n: float = 0.5
    a: float = 1.0
    b: float = 0.5
    param: str = "standard"
    t0: float = 0.0
    t1: float = 2 * math.pi
    step: float | None = None
    tol: float = 1e-9
    p0: Vec2 = Vec2(0.0, 0.0)
    rho0: float = 1.0
    zeta0: float = math.pi / 2
    phi0: float = math.pi / 2
    output: str | None = None
    format: str = "csv"
    svg: str | None = None
    capture_eps: float = 1e-6
    anchor_step: float = math.pi / 2
    dev_tol: float = 1e-3
    section: float = math.pi / 2
    cycle_tol: float = 1e-3
    extra: dict = field(default_factory=dict)

    @property
    def shape(self) -> EllipseShape:
        return EllipseShape(self.a, self.b)

    @property
    def settings(self) -> IntegratorSettings:
        if self.step is not None:
            return IntegratorSettings.fixed(self.step)
        return IntegratorSettings(rel_tol=self.tol)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        for name in ("n", "a", "b", "t0", "t1", "tol", "rho0", "zeta0", "phi0", "capture_eps"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"--{name.replace('_', '-')} must be a finite number")
        if not self.n > 0:
            raise ValueError("--n must be positive")
        self.shape  # raises on bad axes
        if self.format not in ("csv", "json"):
            raise ValueError("--format must be csv or json")
        if self.param not in START_PARAM:
            raise ValueError(f"--param must be one of {sorted(START_PARAM)}")
        if self.param == "circle" and self.a != self.b:
            raise ValueError("--param circle requires --a equal to --b")
        if self.step is not None and not self.step > 0:
            raise ValueError("--step must be positive")
        if not self.tol > 0:
            raise ValueError("--tol must be positive")
        if self.command in ("simulate", "dynsys", "limit-cycle", "zeta-ode") and not self.t1 > self.t0:
            raise ValueError("--t1 must exceed --t0")
        if self.command in ("dynsys", "limit-cycle", "zeta-ode") and not self.rho0 > 0:
            raise ValueError("--rho0 must be positive")
        if self.command == "equilibrium" and not self.n < 1:
            raise ValueError("equilibrium needs --n < 1")
        if self.command == "limit-cycle" and self.a == self.b:
            log.info("a == b: sections of the circular system converge to its equilibrium")


# --- output -----------------------------------------------------------------

def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else format(float(v), ".17g")
    return str(v)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_csv(path) -> tuple[list[str], list[list[float | str | None]]]:
    """Read a table written by :func:`to_csv`; numeric cells become floats."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = []
        for raw in r:
            row = []
            for cell in raw:
                if cell == "":
                    row.append(None)
                else:
                    try:
                        row.append(float(cell))
                    except ValueError:
                        row.append(cell)
            rows.append(row)
    return header, rows


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_atomic(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent if str(target.parent) else ".",
                               prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- commands ---------------------------------------------------------------

def _cmd_simulate(cfg: RunConfig):
    offset = START_PARAM[cfg.param]
    pc = PursuitConfig(cfg.n, cfg.p0, cfg.t0 + offset, cfg.t1 + offset, cfg.capture_eps)
    run = simulate_pursuit(cfg.param, cfg.shape, pc, cfg.settings)
    E, P, lam = run.evader, run.pursuer, run.lam
    rho = np.hypot(*(E - P).T)
    rows = [[s, e[0], e[1], p[0], p[1], r, l] for s, e, p, r, l in zip(run.params, E, P, rho, lam)]
    summary = {"samples": len(rows), "capture": None}
    if run.capture is not None:
        summary["capture"] = {"param": float(run.capture.param),
                              "x": run.capture.position.x, "y": run.capture.position.y}
        print(f"capture at param={run.capture.param:.12g}", file=sys.stderr)
    if cfg.svg:
        from .plotting import plot_pursuit

        plot_pursuit(E, P, cfg.svg, title=f"{cfg.param}, n={cfg.n}, a={cfg.a}, b={cfg.b}")
    return rows, summary


def _cmd_compare(cfg: RunConfig):
    orbits = (cfg.t1 - cfg.t0) / (2 * math.pi) if cfg.t1 > cfg.t0 else 1.0
    rep = invariance_check(cfg.shape, cfg.n, cfg.p0, cfg.anchor_step, cfg.dev_tol, cfg.settings, orbits)
    rows = []
    for an in rep.anchors:
        ps = [c for p in an.pursuers for c in p]
        rows.append([an.k, an.evader.x, an.evader.y, *ps, an.max_dev])
    summary = {"max_pursuer_deviation": rep.max_pursuer_deviation, "tolerance": rep.tolerance,
               "pass": rep.passed, "captured": rep.captured}
    if cfg.svg:
        from .plotting import plot_anchor_comparison

        plot_anchor_comparison(rep.runs, cfg.svg, title="pursuer x across parameterizations")
    return rows, summary


def _cmd_dynsys(cfg: RunConfig):
    if cfg.a == cfg.b:
        dyn = integrate_circle_dds(cfg.n, cfg.a, cfg.rho0, cfg.zeta0, cfg.t0, cfg.t1,
                                   cfg.settings, cfg.capture_eps)
        rows = [[t, y[0], y[1], None] for t, y in zip(dyn.t, dyn.traj.y)]
    else:
        dyn = integrate_ellipse_dds(cfg.n, cfg.shape, cfg.rho0, cfg.zeta0, cfg.phi0, cfg.t0,
                                    cfg.t1, cfg.settings, cfg.capture_eps)
        rows = [[t, y[0], y[1], y[2]] for t, y in zip(dyn.t, dyn.traj.y)]
    fin = dyn.traj.final
    summary = {"final": {"rho": fin[0], "zeta": fin[1]}, "capture_t": dyn.capture_t,
               "elliptical": dyn.elliptical}
    if cfg.svg:
        from .plotting import plot_phase

        plot_phase(dyn.zeta, dyn.rho, cfg.svg, title=f"n={cfg.n}, a={cfg.a}, b={cfg.b}")
    return rows, summary


def _cmd_equilibrium(cfg: RunConfig):
    rep = equilibrium_report(cfg.n, cfg.a)
    l1, l2 = rep.eigenvalues
    rows = [[rep.rho_star, rep.zeta_star, rep.stability, l1.real, l1.imag, l2.real, l2.imag]]
    summary = {"n": cfg.n, "a": cfg.a, **rep.as_dict()}
    return rows, summary


def _cmd_zeta_ode(cfg: RunConfig):
    res = zeta_ode_check(cfg.shape, cfg.n, cfg.rho0, cfg.zeta0, cfg.phi0, cfg.t1 - cfg.t0, cfg.settings)
    if res.skipped:
        raise SingularityError(res.reason)
    rows = [[th, z, zr, abs(z - zr)] for th, z, zr in zip(res.thetas, res.zeta_ode, res.zeta_dds)]
    summary = {"max_abs_diff": res.max_dev}
    if cfg.svg:
        from .plotting import plot_series

        plot_series(res.thetas, {"second-order": res.zeta_ode, "reduced system": res.zeta_dds},
                    cfg.svg, xlabel="Theta [rad]", title="zeta(Theta)")
    return rows, summary


def _cmd_limit_cycle(cfg: RunConfig):
    dyn = integrate_ellipse_dds(cfg.n, cfg.shape, cfg.rho0, cfg.zeta0, cfg.phi0, cfg.t0, cfg.t1,
                                cfg.settings, cfg.capture_eps)
    cr = poincare_crossings(dyn, cfg.section)
    res = limit_cycle_detect(cr, cfg.cycle_tol)
    rows = [[c.k, c.rho, c.zeta_wrapped, None if i == 0 else res.gaps[i - 1]] for i, c in enumerate(cr)]
    summary = {"converged": res.converged, "last_gap": res.last_gap,
               "cycle_point": list(res.cycle_point), "gaps_nonincreasing": res.gaps_nonincreasing}
    if cfg.svg:
        from .plotting import plot_phase

        plot_phase(wrap_angle(dyn.zeta), dyn.rho, cfg.svg, title="section points",
                   marks=[(c.zeta_wrapped, c.rho) for c in cr])
    return rows, summary


HANDLERS = {
    "simulate": _cmd_simulate,
    "compare-params": _cmd_compare,
    "dynsys": _cmd_dynsys,
    "equilibrium": _cmd_equilibrium,
    "zeta-ode": _cmd_zeta_ode,
    "limit-cycle": _cmd_limit_cycle,
}


def render(cfg: RunConfig, rows, summary) -> str:
    cols = COLUMNS[cfg.command]
    if cfg.format == "csv":
        return to_csv(cols, rows)
    if cfg.command == "equilibrium":
        doc = summary
    else:
        doc = {"command": cfg.command, "columns": cols,
               "rows": [[_jsonable(v) for v in row] for row in rows], **summary}
    return json.dumps(doc, indent=2, default=_jsonable) + "\n"


def run(cfg: RunConfig) -> int:
    """Execute one command and write its output. Returns the exit status."""
    try:
        cfg.validate()
        rows, summary = HANDLERS[cfg.command](cfg)
        write_atomic(cfg.output, render(cfg, rows, summary))
    except (IntegrationError, SingularityError, CaptureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, PursuitLabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


# --- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = _Parser(add_help=False)
    common.add_argument("--config", default=S, help="JSON file with flag values (flags win)")
    common.add_argument("--n", type=float, default=S, help="pursuer/evader speed ratio")
    common.add_argument("--a", type=float, default=S, help="semi-axis along x")
    common.add_argument("--b", type=float, default=S, help="semi-axis along y")
    common.add_argument("--t0", type=float, default=S)
    common.add_argument("--t1", type=float, default=S)
    common.add_argument("--step", type=float, default=S, help="fixed RK4 step (default: adaptive)")
    common.add_argument("--tol", type=float, default=S, help="adaptive relative tolerance")
    common.add_argument("--output", "-o", default=S, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=S)
    common.add_argument("--svg", default=S, help="also write an SVG plot here")
    common.add_argument("--capture-eps", dest="capture_eps", type=float, default=S)
    common.add_argument("-v", "--verbose", action="store_true", default=S)

    parser = _Parser(prog="pursuit-lab", description="Pursuit on ellipses: simulations and reduced dynamics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="Cartesian pursuit simulation")
    p.add_argument("--param", choices=sorted(START_PARAM), default=S)
    p.add_argument("--p0", type=float, nargs=2, metavar=("X", "Y"), default=S)

    p = sub.add_parser("compare-params", parents=[common], help="pursuer under the three parameterizations")
    p.add_argument("--p0", type=float, nargs=2, metavar=("X", "Y"), default=S)
    p.add_argument("--anchor-step", dest="anchor_step", type=float, default=S)
    p.add_argument("--dev-tol", dest="dev_tol", type=float, default=S)

    for name, hlp in (("dynsys", "integrate the reduced (rho, zeta) system"),
                      ("zeta-ode", "second-order zeta(Theta) equation vs the reduced system"),
                      ("limit-cycle", "Poincare sections of the elliptical reduced system")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--rho0", type=float, default=S)
        p.add_argument("--zeta0", type=float, default=S)
        p.add_argument("--phi0", type=float, default=S)
        if name == "limit-cycle":
            p.add_argument("--section", type=float, default=S, help="section phase (default pi/2)")
            p.add_argument("--cycle-tol", dest="cycle_tol", type=float, default=S)

    sub.add_parser("equilibrium", parents=[common], help="circular equilibrium and its stability")
    return parser


def config_from_args(argv=None) -> RunConfig:
    """Merge command defaults, an optional JSON config file and explicit flags."""
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    verbose = ns.pop("verbose", False)
    values = dict(BASE_DEFAULTS)
    values.update(COMMAND_DEFAULTS.get(command, {}))
    cfg_path = ns.pop("config", None)
    if cfg_path is not None:
        try:
            with open(cfg_path) as fh:
                file_vals = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config {cfg_path}: {exc}") from exc
        if not isinstance(file_vals, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = set(file_vals) - set(BASE_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(file_vals)
    values.update(ns)
    values["p0"] = Vec2(*map(float, values["p0"]))
    cfg = RunConfig(command=command, **values)
    cfg.extra["verbose"] = verbose
    return cfg


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except SystemExit as exc:  # argparse usage errors, --help, --version
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if cfg.extra.get("verbose") else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
