"""Command-line front end: declarative job configs, kernel-family registry,
and machine-readable CSV/JSON emission for offline plotting and regression
baselines.

Usage:  carleman-scatter <command> --config <path> [--out <path>]
                          [--format csv|json]

The config is a single JSON document; see ``validate_config`` for the
schema.  Exit codes: 0 ok, 2 validation, 3 numerical, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import discrete_spectrum as ds
from . import evolution, mellin, scattering
from .errors import CarlemanError
from .spectral_core import PI, SpectralPoint, resolvent_kernel, spectral_density

SCHEMA_VERSION = "v1"
COMMANDS = ("resolvent", "density", "evolve", "scatter", "count")
MIN_GRID_POINTS = 64

_KERNEL_SAMPLE_POINTS = 12
_EVOLVE_SAMPLE_POINTS = 33


@dataclass(frozen=True)
class Diagnostic:
    field: str
    message: str

    def __str__(self):
        return f"{self.field}: {self.message}"


@dataclass(frozen=True)
class KernelFamily:
    """A named parametric profile with its documented decay conditions."""

    name: str
    required: tuple
    build: object
    conditions: object  # (params, alpha) -> list[str]
    decay_note: str


def _build_exp(params):
    c = float(params["c"])
    return scattering.PerturbationKernel.hankel(
        lambda t: c * np.exp(-t), alpha=float(params.get("alpha", 2.0))
    )


def _build_gamma(params):
    c, a = float(params["c"]), float(params["a"])
    return scattering.PerturbationKernel.hankel(
        lambda t: c * t**a * np.exp(-t), alpha=float(params.get("alpha", 2.0))
    )


def _build_rational(params):
    c, p = float(params["c"]), float(params["p"])
    return scattering.PerturbationKernel.hankel(
        lambda t: c * (1.0 + t) ** (-p), alpha=float(params.get("alpha", 2.0))
    )


def _cond_exp(params, alpha):
    return []


def _cond_gamma(params, alpha):
    a = float(params.get("a", 0.0))
    if a <= -0.5:
        return [
            f"gamma family with a={a:g} is too singular at t=0 for the weighted "
            f"square-integrability condition (needs a > -1/2 at alpha={alpha:g})"
        ]
    return []


def _cond_rational(params, alpha):
    p = float(params.get("p", 0.0))
    if p <= 1.0:
        return [
            f"rational family with p={p:g} decays too slowly: the "
            f"<ln t>^{{4*{alpha:g}}} t-weighted square integral diverges for p <= 1"
        ]
    return []


KERNEL_FAMILIES = {
    "exp": KernelFamily(
        name="exp",
        required=("c",),
        build=_build_exp,
        conditions=_cond_exp,
        decay_note="c*exp(-t): satisfies the weighted decay conditions for every alpha",
    ),
    "gamma": KernelFamily(
        name="gamma",
        required=("c", "a"),
        build=_build_gamma,
        conditions=_cond_gamma,
        decay_note="c*t^a*exp(-t): needs a > -1/2",
    ),
    "rational": KernelFamily(
        name="rational",
        required=("c", "p"),
        build=_build_rational,
        conditions=_cond_rational,
        decay_note="c*(1+t)^-p: needs p > 1",
    ),
}

_KNOWN_KEYS = {"command", "grid", "kernel", "sweep", "tolerances", "output"}
_KERNEL_COMMANDS = {"scatter", "count"}


def validate_config(cfg):
    """Collect every violated invariant of a job config as diagnostics."""
    diags = []
    if not isinstance(cfg, dict):
        return [Diagnostic("config", "config must be a JSON object")]
    for key in sorted(set(cfg) - _KNOWN_KEYS):
        diags.append(Diagnostic(key, "unknown configuration key"))

    command = cfg.get("command")
    if command not in COMMANDS:
        diags.append(Diagnostic("command", f"must be one of {', '.join(COMMANDS)}"))

    grid = cfg.get("grid", {})
    if not isinstance(grid, dict):
        diags.append(Diagnostic("grid", "must be an object with x_min, x_max, n"))
        grid = {}
    x_min = grid.get("x_min", -40.0)
    x_max = grid.get("x_max", 40.0)
    n = grid.get("n", 2048)
    if not isinstance(n, int) or n < MIN_GRID_POINTS:
        diags.append(Diagnostic("grid.n", f"grid too small: need n >= {MIN_GRID_POINTS}"))
    if not (isinstance(x_min, (int, float)) and isinstance(x_max, (int, float)) and x_max > x_min):
        diags.append(Diagnostic("grid.x_max", "must exceed grid.x_min"))

    kernel = cfg.get("kernel")
    alpha = 2.0
    if kernel is None:
        if command in _KERNEL_COMMANDS:
            diags.append(Diagnostic("kernel", f"command {command!r} needs a kernel"))
    elif not isinstance(kernel, dict) or "family" not in kernel:
        diags.append(Diagnostic("kernel.family", "kernel needs a family name"))
    else:
        family = KERNEL_FAMILIES.get(kernel["family"])
        if family is None:
            diags.append(
                Diagnostic(
                    "kernel.family",
                    f"unknown family {kernel['family']!r}; known: "
                    + ", ".join(sorted(KERNEL_FAMILIES)),
                )
            )
        else:
            alpha = float(kernel.get("alpha", 2.0))
            missing = [p for p in family.required if p not in kernel]
            if missing:
                diags.append(
                    Diagnostic("kernel", f"family {family.name!r} needs {missing}")
                )
            else:
                for msg in family.conditions(kernel, alpha):
                    diags.append(Diagnostic("kernel", msg))

    sweep = cfg.get("sweep", [])
    if not isinstance(sweep, list) or not all(
        isinstance(v, (int, float)) for v in sweep
    ):
        diags.append(Diagnostic("sweep", "must be a list of numbers"))
    elif command in COMMANDS:
        lo, hi = {
            "resolvent": (1e-6, PI - 1e-6),
            "density": (1e-6, PI - 1e-6),
            "evolve": (evolution.T_MIN, float("inf")),
            "scatter": (1e-9, float("inf")),
            "count": (PI, float("inf")),
        }[command]
        for i, v in enumerate(sweep):
            if not lo <= float(v) <= hi or float(v) == PI and command == "count":
                diags.append(
                    Diagnostic(
                        f"sweep[{i}]",
                        f"value {v:g} outside the {command} domain [{lo:g}, {hi:g}]",
                    )
                )

    output = cfg.get("output", {})
    if output and not isinstance(output, dict):
        diags.append(Diagnostic("output", "must be an object"))
    elif isinstance(output, dict):
        fmt = output.get("format", "csv")
        if fmt not in ("csv", "json"):
            diags.append(Diagnostic("output.format", "must be 'csv' or 'json'"))
    return diags


def _grid_from(cfg):
    grid = cfg.get("grid", {})
    return mellin.LogGrid(
        float(grid.get("x_min", -40.0)),
        float(grid.get("x_max", 40.0)),
        int(grid.get("n", 2048)),
    )


def build_kernel(cfg):
    kernel = cfg["kernel"]
    return KERNEL_FAMILIES[kernel["family"]].build(kernel)


def _subsample(values, count):
    idx = np.unique(np.linspace(0, len(values) - 1, count).astype(int))
    return idx


def _run_resolvent(cfg):
    grid = _grid_from(cfg)
    idx = _subsample(grid.t, _KERNEL_SAMPLE_POINTS)
    rows = []
    for lam in cfg.get("sweep", []):
        point = SpectralPoint.boundary(float(lam), "+")
        for i in idx:
            for j in idx:
                a = resolvent_kernel(grid.t[i], grid.t[j], point)
                rows.append((float(lam), grid.t[i], grid.t[j], a.real, a.imag))
    return ["lambda", "t", "s", "re_a", "im_a"], rows


def _run_density(cfg):
    grid = _grid_from(cfg)
    idx = _subsample(grid.t, _KERNEL_SAMPLE_POINTS)
    rows = []
    for lam in cfg.get("sweep", []):
        for i in idx:
            for j in idx:
                d = spectral_density(grid.t[i], grid.t[j], float(lam))
                rows.append((float(lam), grid.t[i], grid.t[j], d))
    return ["lambda", "t", "s", "density"], rows


# the evolve command propagates one canonical state: a Gaussian spectral
# window centred inside the stationary-phase-safe band on the fast branch
# (numerically compact there, with Gaussian conjugate decay)
EVOLVE_WINDOW_CENTER = 0.65
EVOLVE_WINDOW_SIGMA = 0.04


def _run_evolve(cfg):
    grid = _grid_from(cfg)
    values = np.exp(-((grid.k - EVOLVE_WINDOW_CENTER) ** 2) / (2 * EVOLVE_WINDOW_SIGMA**2))
    spec = mellin.MellinSpectrum(grid=grid, values=values + 0j)
    f0 = mellin.mellin_inverse(spec)
    rows = []
    for T in cfg.get("sweep", []):
        T = float(T)
        ft = evolution.propagate_exact(f0, grid, T)
        half = PI * PI * abs(T) / 2.0
        inside = np.nonzero(np.abs(grid.x) < 0.98 * half)[0]
        if inside.size == 0:
            continue
        pick = inside[_subsample(inside, _EVOLVE_SAMPLE_POINTS)]
        approx = evolution.propagate_stationary_phase(spec, T, grid.t[pick])
        for i, gi in enumerate(pick):
            ex = complex(ft[gi])
            ap = complex(approx.values[i])
            rows.append(
                (T, grid.t[gi], ex.real, ex.imag, ap.real, ap.imag, abs(ex - ap))
            )
    return ["T", "t", "re_exact", "im_exact", "re_asymptotic", "im_asymptotic", "abs_error"], rows


def _run_scatter(cfg):
    grid = _grid_from(cfg)
    kernel = build_kernel(cfg)
    rows = []
    for k in cfg.get("sweep", []):
        sm = scattering.scattering_matrix(kernel, float(k), grid)
        rows.append(
            (
                float(k),
                sm.s11.real, sm.s11.imag,
                sm.s12.real, sm.s12.imag,
                sm.s21.real, sm.s21.imag,
                sm.s22.real, sm.s22.imag,
                sm.unitarity_defect,
            )
        )
    return [
        "k",
        "re_s11", "im_s11", "re_s12", "im_s12",
        "re_s21", "im_s21", "re_s22", "im_s22",
        "unitarity_defect",
    ], rows


def _run_count(cfg):
    grid = _grid_from(cfg)
    kernel = build_kernel(cfg)
    sweep = [float(v) for v in cfg.get("sweep", [])]
    alpha = float(cfg.get("kernel", {}).get("alpha", 2.0))
    rows = []
    if sweep:
        direct = ds.certified_counts(kernel, sweep, grid)
        bound = ds.eigenvalue_bound(kernel, alpha, grid)
        wsq = ds.resonance_weight(kernel)
        for lam, nd in zip(sweep, direct):
            nbs = ds.birman_schwinger_count(kernel, lam, grid)
            rows.append((lam, nbs, nd, bound, wsq))
    return ["lambda", "count_bs", "count_direct", "bound", "w_norm_sq"], rows


_RUNNERS = {
    "resolvent": _run_resolvent,
    "density": _run_density,
    "evolve": _run_evolve,
    "scatter": _run_scatter,
    "count": _run_count,
}


def _format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def emit_csv(command, columns, rows):
    lines = [f"# carleman-scatter {command} {SCHEMA_VERSION} columns: {','.join(columns)}"]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def emit_json(command, columns, rows):
    def cell(v):
        if isinstance(v, (bool, np.bool_)):
            return bool(v)
        if isinstance(v, (int, np.integer)):
            return int(v)
        return float(v)

    doc = {
        "schema": f"carleman-scatter {command} {SCHEMA_VERSION}",
        "columns": list(columns),
        "rows": [[cell(v) for v in row] for row in rows],
    }
    return json.dumps(doc, indent=1) + "\n"


def run(cfg, fmt=None):
    """Execute a validated config; returns the rendered output text."""
    command = cfg["command"]
    columns, rows = _RUNNERS[command](cfg)
    fmt = fmt or cfg.get("output", {}).get("format", "csv")
    render = emit_csv if fmt == "csv" else emit_json
    return render(command, columns, rows)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="carleman-scatter",
        description="spectral/scattering computations for the 1/(t+s) kernel",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON job config")
    parser.add_argument("--out", default=None, help="output path (default: stdout)")
    parser.add_argument("--format", default=None, choices=("csv", "json"))
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        print(f"error: io: config: {exc}", file=sys.stderr)
        return 4
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        print(f"error: validation: config: invalid JSON: {exc}", file=sys.stderr)
        return 2

    if isinstance(cfg, dict) and "command" not in cfg:
        cfg = dict(cfg, command=args.command)
    diags = validate_config(cfg)
    if not diags and cfg.get("command") != args.command:
        diags = [
            Diagnostic(
                "command",
                f"config command {cfg.get('command')!r} does not match CLI "
                f"argument {args.command!r}",
            )
        ]
    if diags:
        print(f"error: validation: {diags[0]}", file=sys.stderr)
        for d in diags[1:]:
            print(f"  also: {d}", file=sys.stderr)
        return 2

    try:
        text = run(cfg, fmt=args.format)
    except CarlemanError as exc:
        print(f"error: numerical: {exc.code}: {exc}", file=sys.stderr)
        return 3

    out_path = args.out or cfg.get("output", {}).get("path")
    if out_path:
        try:
            with open(out_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: io: output: {exc}", file=sys.stderr)
            return 4
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
