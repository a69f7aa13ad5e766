"""Command-line front end: config files, subcommand dispatch, artifacts.

Config files are INI with sections [domain], [exponent], [potential],
[lambda], [solver], [output]. A complete annotated example ships in
configs/; the short form:

    [domain]
    dimension = 1
    extent_x = 0, 1
    cells_x = 64

    [exponent]
    p = 2 + x

    [potential]
    kind = j1            ; j1 | expression | pieces
    nu = 1.0
    h = 2
    r_plus = 5.0

    [lambda]
    value = 0.0

    [solver]
    route = mp           ; mp | min
    seed = 0

    [output]
    directory = runs/demo
    history = false

Exit codes: 0 when the run succeeded and every reported check held, 1 when
the run completed but a check or convergence failed, 2 on configuration
errors (including unknown CLI usage). The manifest JSON is written last, so
its output list only ever names files that exist.
"""

import argparse
import configparser
import csv
import json
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import (AnticoercivityError, ConfigurationError, NumericsError,
                     UnboundedEnergyError)
from .exponent import field_from_config_value, sobolev_critical, validate
from .functional import ProblemConfig, SolverParams
from .mesh import Mesh
from .modular import run_lemma_sweep
from .potential import PotentialSpec, builtin_j1
from .solver import (find_endpoint, global_minimize, hypothesis_stamps,
                     mountain_pass, verify_geometry)

__all__ = ["parse_config", "parse_config_text", "emit_config",
           "config_signature", "dispatch", "entry"]

_SOLVER_FIELD_TYPES = {
    "tol": float, "max_outer": int, "path_points": int, "multistart": int,
    "rho": float, "endpoint_cap": int, "probe_count": int,
    "sphere_samples": int, "armijo_c": float, "armijo_shrink": float,
    "armijo_max_backtracks": int, "certify_tol": float,
    "history_stride": int, "seed": int,
}
_ROUTES = ("mp", "min")
# hypothesis constants accepted in [potential]; floats except the field texts
_HYP_FLOAT_KEYS = ("c1", "c", "mu", "nu")
_HYP_TEXT_KEYS = ("r", "h")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _find_key_line(lines, section, key):
    """1-based line of `key = ...` inside [section]; 0 when not found."""
    want_section = f"[{section}]"
    inside = False
    for i, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            inside = stripped == want_section
            continue
        if inside and stripped and not stripped.startswith(("#", ";")):
            name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if name.lower() == key.lower():
                return i
    return 0


class _SectionReader:
    """Tracks consumed keys and renders line-precise error locations."""

    def __init__(self, data, lines, origin, overridden):
        self.data = data
        self.lines = lines
        self.origin = origin
        self.overridden = overridden
        self.consumed = {sec: set() for sec in data}

    def _where(self, section, key):
        if (section, key) in self.overridden:
            return f"[{section}] {key} (command-line override)"
        line = _find_key_line(self.lines, section, key)
        at = f", line {line}" if line else ""
        return f"[{section}] {key} ({self.origin}{at})"

    def take(self, section, key, conv=str, default=None, required=False):
        sec = self.data.get(section, {})
        if key not in sec:
            if required:
                raise ConfigurationError(
                    f"missing required key {self._where(section, key)}")
            return default
        self.consumed.setdefault(section, set()).add(key)
        raw = sec[key].strip()
        try:
            return conv(raw)
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(
                f"bad value for {self._where(section, key)}: "
                f"{raw!r} ({exc})") from exc

    def error(self, section, key, message):
        raise ConfigurationError(f"{self._where(section, key)}: {message}")

    def reject_unknown(self):
        known_sections = {"domain", "exponent", "potential",
                          "lambda", "solver", "output"}
        for section, entries in self.data.items():
            if section not in known_sections:
                raise ConfigurationError(
                    f"unknown config section [{section}] in {self.origin}")
            extra = set(entries) - self.consumed.get(section, set())
            if extra:
                key = sorted(extra)[0]
                raise ConfigurationError(
                    f"unknown key {self._where(section, key)}")


def _parse_bool(raw):
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_pair(raw):
    parts = [part.strip() for part in raw.split(",")]
    if len(parts) != 2:
        raise ValueError("expected two comma-separated numbers")
    return float(parts[0]), float(parts[1])


def _parse_route(raw):
    low = raw.strip().lower()
    if low not in _ROUTES:
        raise ValueError(f"route must be one of {'/'.join(_ROUTES)}")
    return low


def _split_override(text):
    if "=" not in text:
        raise ConfigurationError(
            f"override {text!r} is not of the form section.key=value")
    target, value = text.split("=", 1)
    if "." not in target:
        raise ConfigurationError(
            f"override {text!r} is not of the form section.key=value")
    section, key = target.split(".", 1)
    return section.strip().lower(), key.strip().lower(), value.strip()


def parse_config(path, overrides=()):
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), origin=str(path),
                             overrides=overrides)


def parse_config_text(text, origin="<config>", overrides=()):
    """Parse and fully validate a config; raises ConfigurationError."""
    cp = configparser.RawConfigParser()
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigurationError(f"config parse failure: {exc}") from exc
    data = {sec.lower(): {k.lower(): v for k, v in cp.items(sec)}
            for sec in cp.sections()}

    overridden = set()
    for item in overrides:
        section, key, value = _split_override(item)
        data.setdefault(section, {})[key] = value
        overridden.add((section, key))

    reader = _SectionReader(data, text.splitlines(), origin, overridden)

    # -- domain ------------------------------------------------------------
    dim = reader.take("domain", "dimension", int, required=True)
    if dim not in (1, 2):
        reader.error("domain", "dimension", "dimension must be 1 or 2")
    extent_x = reader.take("domain", "extent_x", _parse_pair, required=True)
    cells_x = reader.take("domain", "cells_x", int, required=True)
    if dim == 2:
        extent_y = reader.take("domain", "extent_y", _parse_pair,
                               required=True)
        cells_y = reader.take("domain", "cells_y", int, required=True)
        mesh = Mesh(2, (extent_x, extent_y), (cells_x, cells_y))
    else:
        mesh = Mesh(1, (extent_x,), (cells_x,))

    # -- exponent ----------------------------------------------------------
    p_text = reader.take("exponent", "p", str, required=True)
    p = field_from_config_value(p_text, mesh.node_coords, dim)
    summary = validate(p)
    if not summary.valid:
        reader.error("exponent", "p", "inadmissible exponent field: "
                     + "; ".join(summary.violations))

    # -- potential ---------------------------------------------------------
    kind = reader.take("potential", "kind", str, required=True).lower()
    hypothesis = {}
    if kind == "j1":
        nu = reader.take("potential", "nu", float, required=True)
        h_text = reader.take("potential", "h", str, required=True)
        r_plus = reader.take("potential", "r_plus", float, required=True)
        potential = builtin_j1(nu, h_text, r_plus)
        hypothesis.update({"nu": nu, "h": h_text, "r": r_plus})
    elif kind == "expression":
        expr = reader.take("potential", "expr", str, required=True)
        potential = PotentialSpec.smooth(expr, name="expression")
    elif kind == "pieces":
        defs = []
        index = 1
        while f"piece.{index}" in data.get("potential", {}):
            raw = reader.take("potential", f"piece.{index}", str)
            parts = [part.strip() for part in raw.split(";")]
            if len(parts) != 3:
                reader.error("potential", f"piece.{index}",
                             "expected 'lo ; hi ; expression'")
            defs.append((float(parts[0]), float(parts[1]), parts[2]))
            index += 1
        if not defs:
            reader.error("potential", "kind",
                         "kind=pieces needs piece.1, piece.2, ...")
        potential = PotentialSpec.from_pieces(defs, name="pieces")
    else:
        reader.error("potential", "kind",
                     "kind must be j1, expression, or pieces")
    for key in _HYP_FLOAT_KEYS:
        if key in data.get("potential", {}) and not (kind == "j1"
                                                     and key == "nu"):
            hypothesis[key] = reader.take("potential", key, float)
    for key in _HYP_TEXT_KEYS:
        if key in data.get("potential", {}) and not (kind == "j1"
                                                     and key == "h"):
            hypothesis[key] = reader.take("potential", key, str)

    # -- lambda ------------------------------------------------------------
    lam = reader.take("lambda", "value", float, default=0.0)

    # -- solver ------------------------------------------------------------
    route = reader.take("solver", "route", _parse_route, default="mp")
    kwargs = {}
    for key, conv in _SOLVER_FIELD_TYPES.items():
        if key in data.get("solver", {}):
            kwargs[key] = reader.take("solver", key, conv)
    params = SolverParams(**kwargs)

    # -- output ------------------------------------------------------------
    out_dir = reader.take("output", "directory", str, default=None)
    out_history = reader.take("output", "history", _parse_bool,
                              default=False)

    reader.reject_unknown()

    # -- cross-section ordering checks --------------------------------------
    warnings = []
    if "r" in hypothesis:
        r_field = field_from_config_value(hypothesis["r"], mesh.node_coords,
                                          dim)
        r_min = float(np.min(r_field.values))
        if r_min <= summary.p_plus:
            reader.error(
                "potential", "r" if "r" in data.get("potential", {})
                else "r_plus",
                "growth ordering violated: the superlinear comparison needs "
                f"max p(x) < min r(x), got max p = {summary.p_plus} >= "
                f"min r = {r_min}")
        crit = sobolev_critical(p).values
        finite = np.isfinite(crit)
        if np.any(r_field.values[finite] >= crit[finite]):
            reader.error(
                "potential", "r" if "r" in data.get("potential", {})
                else "r_plus",
                "subcritical ordering violated: r(x) < N p(x)/(N - p(x)) "
                "must hold wherever p(x) < N")
    if route == "mp" and "nu" in hypothesis:
        lam_cap = float(hypothesis["nu"]) * summary.p_minus
        if lam >= lam_cap:
            warnings.append(
                f"lambda = {lam} is not below nu * min p = {lam_cap}; the "
                "mountain-pass existence interval is open: "
                "lambda in (-inf, nu * min p)")

    config = ProblemConfig(mesh=mesh, p=p, lam=lam, potential=potential,
                           params=params, hypothesis=hypothesis)
    config.echo = {
        "route": route,
        "output": {"directory": out_dir, "history": out_history},
        "exponent_text": p_text,
        "potential_kind": kind,
        "warnings": warnings,
        "origin": origin,
    }
    return config


# ---------------------------------------------------------------------------
# config emission (round-trip support)
# ---------------------------------------------------------------------------

def config_signature(config):
    """Canonical dict of everything parse_config decided; used for equality."""
    mesh = config.mesh
    potential = {"kind": config.echo.get("potential_kind", "expression")}
    if potential["kind"] == "j1":
        declared = config.potential.declared
        potential.update({"nu": declared["nu"], "h": declared["h"],
                          "r_plus": declared["r_plus"]})
    elif potential["kind"] == "expression":
        potential["expr"] = config.potential.pieces[0].text
    else:
        potential["pieces"] = [(piece.t_lo, piece.t_hi, piece.text)
                               for piece in config.potential.pieces]
    return {
        "domain": {"dimension": mesh.dimension,
                   "extents": [list(e) for e in mesh.extents],
                   "resolution": list(mesh.resolution)},
        "exponent": config.echo.get("exponent_text"),
        "potential": potential,
        "hypothesis": {k: config.hypothesis[k]
                       for k in sorted(config.hypothesis)},
        "lambda": config.lam,
        "solver": dict(config.params.to_dict(), route=config.echo["route"]),
        "output": dict(config.echo["output"]),
    }


def emit_config(config):
    """Render a config back to INI text; parse_config inverts it exactly."""
    sig = config_signature(config)
    mesh = config.mesh
    lines = ["[domain]", f"dimension = {mesh.dimension}"]
    ax = mesh.extents[0]
    lines.append(f"extent_x = {repr(ax[0])}, {repr(ax[1])}")
    lines.append(f"cells_x = {mesh.resolution[0]}")
    if mesh.dimension == 2:
        ay = mesh.extents[1]
        lines.append(f"extent_y = {repr(ay[0])}, {repr(ay[1])}")
        lines.append(f"cells_y = {mesh.resolution[1]}")
    lines += ["", "[exponent]", f"p = {sig['exponent']}"]

    lines += ["", "[potential]"]
    pot = sig["potential"]
    lines.append(f"kind = {pot['kind']}")
    if pot["kind"] == "j1":
        lines.append(f"nu = {repr(pot['nu'])}")
        lines.append(f"h = {pot['h']}")
        lines.append(f"r_plus = {repr(pot['r_plus'])}")
    elif pot["kind"] == "expression":
        lines.append(f"expr = {pot['expr']}")
    else:
        for i, (lo, hi, text) in enumerate(pot["pieces"], start=1):
            lines.append(f"piece.{i} = {repr(lo)} ; {repr(hi)} ; {text}")
    skip = {"nu", "h", "r"} if pot["kind"] == "j1" else set()
    auto_r = pot["kind"] == "j1" and config.hypothesis.get("r") == pot["r_plus"]
    for key, value in sig["hypothesis"].items():
        if key in skip and (key != "r" or auto_r):
            continue
        rendered = repr(value) if isinstance(value, float) else value
        lines.append(f"{key} = {rendered}")

    lines += ["", "[lambda]", f"value = {repr(config.lam)}"]

    lines += ["", "[solver]", f"route = {sig['solver']['route']}"]
    for key in _SOLVER_FIELD_TYPES:
        lines.append(f"{key} = {repr(sig['solver'][key])}")

    lines += ["", "[output]"]
    if sig["output"]["directory"] is not None:
        lines.append(f"directory = {sig['output']['directory']}")
    lines.append(f"history = {str(sig['output']['history']).lower()}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# run manifest
# ---------------------------------------------------------------------------

def _versions():
    out = {"python": platform.python_version(), "numpy": np.__version__}
    try:
        import scipy
        out["scipy"] = scipy.__version__
    except ImportError:
        pass
    try:
        import sympy
        out["sympy"] = sympy.__version__
    except ImportError:
        pass
    if _kernels.HAS_NUMBA:
        import numba
        out["numba"] = numba.__version__
    try:
        from importlib.metadata import version
        out["plapx"] = version("plapx")
    except Exception:
        out["plapx"] = "unknown"
    return out


def _write_manifest(outdir, subcommand, seed, config_echo, outputs,
                    started, status, extra=None):
    """Write manifest.json last; every listed output must already exist."""
    outdir = Path(outdir)
    for name in outputs:
        if not (outdir / name).is_file():
            raise AssertionError(
                f"internal invariant violation: manifest references missing "
                f"output {name}")
    manifest = {
        "subcommand": subcommand,
        "seed": seed,
        "status": status,
        "config": config_echo,
        "outputs": sorted(outputs),
        "backend": _kernels.BACKEND,
        "versions": _versions(),
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    path = outdir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _now():
    return datetime.now(timezone.utc).isoformat()


def _out_dir(args, config=None):
    if getattr(args, "out", None):
        path = Path(args.out)
    elif config is not None and config.echo["output"]["directory"]:
        path = Path(config.echo["output"]["directory"])
    else:
        path = Path("plapx-out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _json_inf(value):
    if isinstance(value, float) and not np.isfinite(value):
        return "inf" if value > 0 else "-inf"
    return value


def _dump_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _print_warnings(config):
    for message in config.echo.get("warnings", ()):
        print(f"warning: {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _history_csv(path, history):
    columns = ["iteration", "phase", "start", "k_star", "R", "m",
               "cerami", "norm", "note"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for record in history:
            note = ""
            if "polish" in record:
                note = record["polish"].get("method", "polish")
            writer.writerow([
                record.get("iteration", ""), record.get("phase", ""),
                record.get("start", ""), record.get("k_star", ""),
                record.get("R", ""), record.get("m", ""),
                record.get("cerami", ""), record.get("norm", ""), note])


def _cmd_solve(args):
    config = parse_config(args.config, overrides=args.set or ())
    if args.route:
        config.echo["route"] = args.route
    route = config.echo["route"]
    _print_warnings(config)
    outdir = _out_dir(args, config)
    started = _now()
    try:
        if route == "mp":
            result = mountain_pass(config)
        else:
            result = global_minimize(config)
    except (AnticoercivityError, UnboundedEnergyError) as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        _write_manifest(outdir, "solve", config.params.seed,
                        config_signature(config), [], started,
                        status="failed", extra={"error": str(exc)})
        return 1

    payload = result.to_json_dict(config.params.history_stride)
    timing = payload.pop("timing")
    outputs = ["result.json", "solution.csv"]
    _dump_json(outdir / "result.json", payload)
    result.u.to_csv(outdir / "solution.csv")
    if args.history or config.echo["output"]["history"]:
        _history_csv(outdir / "history.csv", result.history)
        outputs.append("history.csv")
    ok = result.converged and result.inclusion.passed
    _write_manifest(outdir, "solve", config.params.seed,
                    config_signature(config), outputs, started,
                    status="ok" if ok else "checks-failed",
                    extra={"timing": timing})
    print(f"route={result.route} converged={result.converged} "
          f"critical_value={result.critical_value:.9g} "
          f"m={result.m_final:.3e} iterations={result.iterations} "
          f"inclusion_slack={result.inclusion.max_slack:.3e} -> {outdir}")
    return 0 if ok else 1


def _parse_rho_list(raw):
    values = [float(part) for part in raw.split(",") if part.strip()]
    if not values or not all(0.0 < v < 1.0 for v in values):
        raise ConfigurationError("--rho needs comma-separated values in (0,1)")
    return values


def _cmd_geometry(args):
    config = parse_config(args.config, overrides=args.set or ())
    _print_warnings(config)
    outdir = _out_dir(args, config)
    started = _now()
    rhos = (_parse_rho_list(args.rho) if args.rho
            else [0.05, 0.1, 0.2, 0.3, 0.4, 0.5])
    endpoint = None
    endpoint_info = None
    try:
        endpoint = find_endpoint(config)
    except AnticoercivityError as exc:
        endpoint_info = {"error": str(exc), "history": exc.history}
    reports = [verify_geometry(config, rho=rho, endpoint=endpoint)
               for rho in rhos]
    if endpoint is not None:
        endpoint_info = {"norm": reports[0].endpoint_norm,
                         "R": reports[0].r_endpoint}
    passed = endpoint is not None and all(rep.passed for rep in reports)
    payload = {
        "rho_sweep": [rep.to_dict() for rep in reports],
        "endpoint": endpoint_info,
        "passed": passed,
    }
    _dump_json(outdir / "geometry.json", payload)
    _write_manifest(outdir, "geometry", config.params.seed,
                    config_signature(config), ["geometry.json"], started,
                    status="ok" if passed else "checks-failed")
    best = max(reports, key=lambda rep: rep.eta_hat)
    print(f"geometry passed={passed} best_eta_hat={best.eta_hat:.6g} "
          f"at rho={best.rho} -> {outdir}")
    return 0 if passed else 1


def _cmd_check_potential(args):
    config = parse_config(args.config, overrides=args.set or ())
    _print_warnings(config)
    outdir = _out_dir(args, config)
    started = _now()
    stamps = hypothesis_stamps(config)
    ran = {name: stamp for name, stamp in stamps.items()}
    failed = [name for name, stamp in ran.items()
              if "error" in stamp or not stamp.get("passed", False)]
    described = config.potential.describe()
    described["pieces"] = [[_json_inf(lo), _json_inf(hi), text]
                           for lo, hi, text in described["pieces"]]
    payload = {
        "potential": described,
        "stamps": ran,
        "failed": sorted(failed),
        "passed": not failed,
    }
    if not ran:
        payload["note"] = ("no hypothesis constants declared in [potential]; "
                           "structural validation only")
    _dump_json(outdir / "potential_report.json", payload)
    _write_manifest(outdir, "check-potential", config.params.seed,
                    config_signature(config), ["potential_report.json"],
                    started, status="ok" if payload["passed"]
                    else "checks-failed")
    print(f"check-potential passed={payload['passed']} "
          f"stamps={sorted(ran)} -> {outdir}")
    return 0 if payload["passed"] else 1


def _cmd_verify_lemmas(args):
    config = None
    if args.config:
        config = parse_config(args.config, overrides=args.set or ())
        mesh, p = config.mesh, config.p
        echo = config_signature(config)
    else:
        mesh = Mesh(1, ((0.0, 1.0),), (64,))
        p = field_from_config_value("2 + x", mesh.node_coords, 1)
        echo = {"default": "interval (0,1), 64 cells, p = 2 + x"}
    outdir = _out_dir(args, config)
    started = _now()
    report = run_lemma_sweep(mesh, p, seed=args.seed, samples=args.samples)
    _dump_json(outdir / "lemma_report.json", report)
    _write_manifest(outdir, "verify-lemmas", args.seed, echo,
                    ["lemma_report.json"], started,
                    status="ok" if report["passed"] else "checks-failed")
    print(f"verify-lemmas passed={report['passed']} "
          f"samples={report['samples']} seed={report['seed']} -> {outdir}")
    return 0 if report["passed"] else 1


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="plapx",
        description="Variable-exponent energy solver and norm toolbox")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required,
                        help="INI problem description")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override a config key")
        sp.add_argument("--out", help="output directory")

    sp = sub.add_parser("solve", help="run one route on one config")
    common(sp)
    sp.add_argument("--route", choices=_ROUTES,
                    help="override the configured route")
    sp.add_argument("--history", action="store_true",
                    help="also write per-iteration history.csv")
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("geometry", help="sphere/endpoint barrier sweep")
    common(sp)
    sp.add_argument("--rho", help="comma-separated radii in (0,1)")
    sp.set_defaults(func=_cmd_geometry)

    sp = sub.add_parser("check-potential",
                        help="run the declared hypothesis checkers")
    common(sp)
    sp.set_defaults(func=_cmd_check_potential)

    sp = sub.add_parser("verify-lemmas",
                        help="randomized norm/modular inequality sweep")
    common(sp, config_required=False)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=500)
    sp.set_defaults(func=_cmd_verify_lemmas)
    return parser


def dispatch(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return int(args.func(args))
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (AnticoercivityError, UnboundedEnergyError, NumericsError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


def entry():
    raise SystemExit(dispatch())


if __name__ == "__main__":
    entry()
