"""Command-line driver: ``speckern <command> [options]``.

Settings come from an optional ``key = value`` file (``--config``) and are
overridden by flags.  Reports are JSON (17 significant digits, keys in a
fixed order) or CSV.  Exit status: 0 success, 2 a verification row failed,
1 usage, configuration or evaluation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import verify
from .control import SeriesControl
from .eisenstein import e_ddeq_residual, e_value
from .errors import SpeckernError
from .kernels import poisson_kernel
from .kronecker import ThetaNormContext, kronecker_verify
from .kseries import KFunctionContext, k_ddeq_residual, k_ladder
from .resolvent import g_heat_integral, g_series_value, g_spectral_value, green_function
from .spectra import (FOUR_PI2, RhoParameter, TorusGeometry, build_cp1_spectrum,
                      build_torus_spectrum, toy_spectrum, weyl_prediction)

COMMANDS = ("spectrum", "heat", "poisson", "kfun", "resolvent", "eisenstein",
            "kronecker-verify", "verify-all")


class UsageError(Exception):
    """Bad command line or configuration file."""


# -- configuration ------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Everything a run needs; built from the config file and flags."""

    command: str = "verify-all"
    geometry: str = "torus"
    omega: list = field(default_factory=lambda: [[1j]])
    cutoff: float = FOUR_PI2 * 10
    degree: int = 40
    vol: float = 1.0
    rho0: float = 0.0
    tol: float = 1e-12
    s: list = field(default_factory=lambda: [2.0])
    t: list = field(default_factory=lambda: [0.1])
    u: list = field(default_factory=lambda: [0.5])
    Z: complex = 0j
    z: list = field(default_factory=lambda: [0.3, 0.4])
    w: list = field(default_factory=lambda: [0.0, 0.0])
    method: str = "auto"
    out: str | None = None
    format: str = "json"
    timings: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if self.geometry not in ("torus", "cp1", "toy"):
            raise UsageError(f"geometry must be torus, cp1 or toy, not {self.geometry!r}")
        if self.format not in ("json", "csv"):
            raise UsageError("format must be json or csv")
        for name in ("cutoff", "vol", "rho0", "tol"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise UsageError(f"{name} must be finite")
        if self.rho0 < 0:
            raise UsageError("rho0 must be >= 0")
        if not 0 < self.tol < 1:
            raise UsageError("tol must lie in (0, 1)")
        for name in ("s", "t", "u", "z", "w"):
            for v in getattr(self, name):
                c = complex(v)
                if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                    raise UsageError(f"{name} entries must be finite")

    def echo(self) -> dict:
        out = {"command": self.command, "geometry": self.geometry}
        if self.geometry == "torus":
            out["omega"] = self.omega
            out["cutoff"] = self.cutoff
        elif self.geometry == "cp1":
            out["degree"] = self.degree
        else:
            out["vol"] = self.vol
        out.update({"rho0": self.rho0, "tol": self.tol, "s": self.s, "t": self.t, "u": self.u,
                    "Z": self.Z, "z": self.z, "w": self.w, "method": self.method,
                    "format": self.format})
        return out


def _parse_number(text: str) -> complex | float:
    text = text.strip().replace(" ", "")
    if not text:
        raise UsageError("empty number")
    try:
        if "j" in text or "J" in text:
            return complex(text)
        return float(text)
    except ValueError as exc:
        raise UsageError(f"cannot parse number {text!r}") from exc


def _parse_list(text: str) -> list:
    return [_parse_number(p) for p in text.split(",") if p.strip()]


def _parse_tau(text: str) -> complex:
    parts = _parse_list(text)
    if len(parts) == 1:
        return complex(parts[0])
    if len(parts) == 2 and all(isinstance(p, float) for p in parts):
        return complex(parts[0], parts[1])
    raise UsageError("tau must be RE,IM or a complex literal like 0.1+1j")


def _parse_omega(text: str) -> list:
    rows = [r for r in text.split(";") if r.strip()]
    return [[complex(v) for v in _parse_list(r)] for r in rows]


_KEYS = {
    "geometry": str, "cutoff": float, "degree": int, "vol": float, "rho0": float, "tol": float,
    "s": _parse_list, "t": _parse_list, "u": _parse_list, "z": _parse_list, "w": _parse_list,
    "Z": lambda x: complex(_parse_number(x)), "method": str, "format": str, "out": str,
    "omega": _parse_omega, "tau": _parse_tau, "command": str,
}


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in _KEYS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        try:
            out[key] = _KEYS[key](val)
        except (ValueError, UsageError) as exc:
            raise UsageError(f"{path}:{n}: bad value for {key}: {exc}") from exc
    return out


def _apply(cfg: RunConfig, values: dict):
    for key, val in values.items():
        if key == "tau":
            cfg.omega = [[complex(val)]]
            cfg.geometry = "torus"
        else:
            setattr(cfg, key, val)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="speckern", description="Spectral kernels on tori and CP^1.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--out", help="report path (default: standard output)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--tol", type=float)
    p.add_argument("--rho0", type=float)
    p.add_argument("--cutoff", type=float, help="eigenvalue cutoff for tori")
    p.add_argument("--tau", help="torus modulus as RE,IM")
    p.add_argument("--omega", help="period matrix rows separated by ';', entries by ','")
    p.add_argument("--geometry", choices=("torus", "cp1", "toy"))
    p.add_argument("--degree", type=int, help="CP^1 degree cutoff")
    p.add_argument("--vol", type=float, help="volume of the toy spectrum")
    p.add_argument("--s", help="comma-separated s values")
    p.add_argument("--t", help="comma-separated heat times")
    p.add_argument("--u", help="comma-separated Poisson u values")
    p.add_argument("--Z", help="Poisson shift Z")
    p.add_argument("--z", help="point z (real coordinates or complex)")
    p.add_argument("--w", help="point w")
    p.add_argument("--method", help="heat: spectral|images|both|auto")
    p.add_argument("--timings", action="store_true", help="add wall-clock timings to the report")
    return p


def parse_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig()
    if ns.config:
        _apply(cfg, read_config_file(ns.config))
    cfg.command = ns.command
    flags = {}
    for key in ("out", "format", "tol", "rho0", "cutoff", "geometry", "degree", "vol", "method"):
        v = getattr(ns, key)
        if v is not None:
            flags[key] = v
    for key in ("s", "t", "u", "z", "w"):
        v = getattr(ns, key)
        if v is not None:
            flags[key] = _parse_list(v)
    if ns.Z is not None:
        flags["Z"] = complex(_parse_number(ns.Z))
    if ns.tau is not None:
        flags["tau"] = _parse_tau(ns.tau)
    if ns.omega is not None:
        flags["omega"] = _parse_omega(ns.omega)
        flags["geometry"] = "torus"
    _apply(cfg, flags)
    cfg.timings = bool(ns.timings)
    cfg.validate()
    return cfg


# -- running ----------------------------------------------------------------------------------

def make_spectrum(cfg: RunConfig, ctrl: SeriesControl):
    if cfg.geometry == "torus":
        geom = TorusGeometry(np.array(cfg.omega, dtype=complex))
        return build_torus_spectrum(geom, cfg.cutoff, ctrl)
    if cfg.geometry == "cp1":
        return build_cp1_spectrum(cfg.degree)
    return toy_spectrum(cfg.vol)


def _point(spec, values):
    if spec.kind == "torus":
        if all(isinstance(v, float) for v in values):
            return np.array(values, dtype=float)
        return np.array([complex(v) for v in values])
    if spec.kind == "cp1":
        if len(values) == 2 and all(isinstance(v, float) for v in values):
            return complex(values[0], values[1])
        return complex(values[0])
    return 0.0


def _value_row(name, kv):
    return verify.row(name, kv.value, err=kv.err)


def run_command(cfg: RunConfig):
    """Execute the configured command; returns (rows, timings)."""
    ctrl = SeriesControl(tol=cfg.tol)
    timings = {}
    start = time.perf_counter()
    spec = make_spectrum(cfg, ctrl)
    timings["spectrum"] = time.perf_counter() - start
    z, w = _point(spec, cfg.z), _point(spec, cfg.w)
    rho = RhoParameter(cfg.rho0)
    ctx = KFunctionContext(spec, rho, ctrl)
    rows = []
    t0 = time.perf_counter()
    cmd = cfg.command
    if cmd == "spectrum":
        levels, starts = spec.levels
        mult = np.add.reduceat(spec.mult, starts)
        for lam, m in zip(levels, mult):
            rows.append(verify.row(f"lambda multiplicity {int(m)}", float(lam)))
        if spec.kind == "torus" and math.isfinite(spec.cutoff):
            rows.append(verify.row("count / Weyl prediction", len(spec) / weyl_prediction(spec, spec.cutoff)))
    elif cmd == "heat":
        method = cfg.method if cfg.method != "auto" or spec.kind == "torus" else "spectral"
        if spec.kind != "torus" and method in ("images", "both"):
            raise UsageError("the image method needs a torus geometry")
        rows = verify.heat_pair_rows(spec, z, w, cfg.t, method, ctrl)
    elif cmd == "poisson":
        for u in cfg.u:
            Z = None if cfg.method == "rho" else cfg.Z
            rows.append(_value_row(f"poisson u={u:g}", poisson_kernel(spec, rho, Z, z, w, u, ctrl=ctrl)))
    elif cmd == "kfun":
        for s in cfg.s:
            vals, err = k_ladder(ctx, [(z, w)], s, 0)
            rows.append(verify.row(f"K s={_fmt(s)}", complex(vals[0, 0]), err=err))
            if complex(s).real > 2 * cfg.rho0:
                res = k_ddeq_residual(ctx, z, w, s) / max(abs(vals[0, 0]), 1e-300)
                rows.append(verify.row(f"K difference equation s={_fmt(s)}", res, 1e-8))
    elif cmd == "resolvent":
        for s in cfg.s:
            b = g_spectral_value(ctx, z, w, s)
            rows.append(_value_row(f"G spectral s={_fmt(s)}", b))
            a = g_series_value(ctx, z, w, s)
            rows.append(_value_row(f"G series s={_fmt(s)}", a))
            rows.append(verify.row(f"G series vs spectral s={_fmt(s)}", verify._rel(a.value, b.value), 1e-6))
            try:
                c = g_heat_integral(ctx, z, w, s)
            except SpeckernError:
                c = None
            if c is not None:
                rows.append(_value_row(f"G heat s={_fmt(s)}", c))
                rows.append(verify.row(f"G heat vs spectral s={_fmt(s)}", verify._rel(c.value, b.value), 1e-6))
        rows.append(_value_row("Green function", green_function(ctx, z, w)))
    elif cmd == "eisenstein":
        for s in cfg.s:
            e = e_value(ctx, z, w, s)
            rows.append(_value_row(f"E s={_fmt(s)}", e))
            res = e_ddeq_residual(ctx, z, w, s) / max(abs(e.value), 1e-300)
            rows.append(verify.row(f"E difference equation s={_fmt(s)}", res, 1e-6))
    elif cmd == "kronecker-verify":
        if spec.kind != "torus" or spec.geometry.N != 1:
            raise UsageError("kronecker-verify needs a one-dimensional torus")
        tau = complex(spec.geometry.period_matrix[0, 0])
        tctx = ThetaNormContext(tau)
        grid = [tctx.w0 + d for d in (-0.4 - 0.4j, -0.2 + 0.3j, 0.4 - 0.2j, -0.3, 0.2 + 0.2j,
                                      -0.05 - 0.35j, 0.35 + 0.4j)]
        rep = kronecker_verify(ctx, tctx, grid, cell_points=256)
        rows += [
            verify.row("std(R)/range(log||theta||^2)", rep["R_std_over_range"], 1e-5),
            verify.row("max |Delta R| / |Delta log||theta||^2|", rep["harmonic_ratio"], 1e-4),
            verify.row("log matching spread over a decade", rep["log_matching_spread"], 1e-3),
            verify.row("c0", rep["c0"]),
            verify.row("c1 direct - c1 integrated", abs(rep["c1_direct"] - rep["c1_integrated"]), 1e-4),
        ]
        if "e_c1" in rep:
            rows.append(verify.row("E-side fit residual", rep["e_fit_residual"], 1e-5))
    elif cmd == "verify-all":
        if spec.kind != "torus":
            raise UsageError("verify-all runs on a torus geometry")
        for name, suite_rows, seconds in verify.run_all(spec, ctrl):
            for r in suite_rows:
                r = dict(r)
                r["name"] = f"{name}: {r['name']}"
                rows.append(r)
            timings[name] = seconds
    timings["command"] = time.perf_counter() - t0
    return rows, timings


def _fmt(s) -> str:
    c = complex(s)
    return f"{c.real:g}" if c.imag == 0 else f"{c.real:g}{c.imag:+g}i"


# -- output -------------------------------------------------------------------------------------

def _encode(obj):
    """Plain JSON-ready structure; complex numbers become {re, im}."""
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_encode(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _Float(obj.real), "im": _Float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return _Float(obj)
    return obj


class _Float(float):
    """Marker for 17-significant-digit output."""


def _dumps(obj, indent=0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _dumps(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return json.dumps(str(obj))
        return format(float(obj), ".17g")
    return json.dumps(obj)


def make_report(cfg: RunConfig, rows, timings) -> dict:
    report = {
        "command": cfg.command,
        "config": cfg.echo(),
        "results": rows,
        "error_estimates": [r["err"] for r in rows],
        "passed": all(r["pass"] for r in rows),
    }
    if cfg.timings:
        report["timings"] = timings
    return report


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return _dumps(_encode(report)) + "\n"
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["name", "value_re", "value_im", "err", "tolerance", "pass"])
    for r in report["results"]:
        v = complex(r["value"])
        tol = "" if r["tolerance"] is None else format(float(r["tolerance"]), ".17g")
        wr.writerow([r["name"], format(v.real, ".17g"), format(v.imag, ".17g"),
                     format(r["err"], ".17g"), tol, "true" if r["pass"] else "false"])
    return buf.getvalue()


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
        rows, timings = run_command(cfg)
    except UsageError as exc:
        print(f"speckern: {exc}", file=sys.stderr)
        return 1
    except (SpeckernError, ArithmeticError, ValueError, MemoryError) as exc:
        print(f"speckern: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    report = make_report(cfg, rows, timings)
    text = render(report, cfg.format)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report["passed"] else 2


if __name__ == "__main__":
    sys.exit(main())
