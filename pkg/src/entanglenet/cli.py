"""Command-line front end.

Every subcommand reads a flat ``key = value`` config file (optional) and
per-key flags that override it, runs one experiment and writes one artifact
plus a run manifest next to it.  Exit status: 0 success, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .channel import DEFAULT_ALPHA, repeaterless_rate
from .percolation import (
    RobustnessQuery,
    ThresholdError,
    critical_points,
    eta_critical,
    estimate_threshold,
    robustness_region,
    spanning_fraction,
)
from .protocol import (
    YIELD_PANELS,
    analytic_yield_by_span,
    chain_success_probability,
    estimate_yield,
    load_scenario,
    trace_chains,
    yield_surface,
)
from .rng import SEED_MAX
from .surfaces import LengthProfile, RootError, critical_lengths, residual, solve_homogeneous, solve_scaled, surface
from .tables import REFERENCE
from .topology.bravais import BravaisConfig, build_bravais
from .topology.graph import dump_graph
from .topology.lattices import (
    INHOMOGENEOUS_BASES,
    LatticeNotAvailable,
    build_inhomogeneous,
    canonical_name,
    lattice_builder,
    build_patch,
    unit_cell,
)

__all__ = ["main", "run", "ConfigError", "parse_config_text", "COMMANDS"]

OUTPUT_ENV = "ENTANGLENET_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


class NumericalFailure(ArithmeticError):
    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.payload = payload or {}


# --- value types -----------------------------------------------------------------

def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(" ", "").split(",") if x)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(" ", "").split(",") if x)


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(x for x in text.replace(" ", "").split(",") if x)


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= SEED_MAX:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return value


@dataclass(frozen=True)
class Key:
    name: str
    parse: Callable[[str], Any]
    default: Any = None
    help: str = ""


COMMON = [
    Key("seed", _seed, None, "master seed (required for stochastic commands)"),
    Key("format", str, "csv", "artifact format: csv or json"),
]

SCHEMAS: dict[str, list[Key]] = {
    "yield": [
        Key("panels", _str_list, tuple(YIELD_PANELS), "preset (gamma, M) panels, comma separated"),
        Key("gamma", float, None, "custom gamma (with M, replaces panels)"),
        Key("M", int, None, "custom column count (with gamma)"),
        Key("N", _int_list, (2, 3, 5, 10), "branch counts"),
        Key("L_min", float, 0.0, "km"),
        Key("L_max", float, 200.0, "km"),
        Key("L_points", int, 41, ""),
        Key("theta", float, math.pi / 4, "radians"),
        Key("alpha", float, DEFAULT_ALPHA, "1/km"),
    ],
    "protocol": [
        Key("N", int, 5, ""),
        Key("M", int, 4, ""),
        Key("ell", float, 22.0, "km, source to terminal"),
        Key("theta", float, math.pi / 4, "radians"),
        Key("alpha", float, DEFAULT_ALPHA, "1/km"),
        Key("gamma", float, 1.0, "Bell-measurement success probability"),
        Key("rounds", int, 100_000, ""),
        Key("scenario", str, None, "scenario file with failures and orientations"),
        Key("diagnostics", _bool, False, "count one-photon arrivals among lost pairs"),
    ],
    "percolate": [
        Key("lattice", str, "square", ""),
        Key("mode", str, "bond", "bond or site"),
        Key("sizes", _int_list, (32, 64), "patch widths in unit cells"),
        Key("p_min", float, 0.3, ""),
        Key("p_max", float, 0.7, ""),
        Key("points", int, 21, ""),
        Key("trials", int, 10_000, ""),
        Key("ratios", _float_list, None, "per-class exponents r_c for p_c = p ** r_c"),
    ],
    "threshold": [
        Key("lattice", str, "square", ""),
        Key("mode", str, "bond", "bond or site"),
        Key("sizes", _int_list, (32, 64, 128), ""),
        Key("trials", int, 10_000, ""),
        Key("ratios", _float_list, None, "per-class exponents r_c for p_c = p ** r_c"),
    ],
    "surface": [
        Key("lattice", str, "triangular", "square, triangular, honeycomb or bowtie-I"),
        Key("ratios", _float_list, None, "length ratios l_c / l_1"),
        Key("lengths", _float_list, None, "class lengths in km (needs alpha)"),
        Key("alpha", float, DEFAULT_ALPHA, "1/km"),
    ],
    "robustness": [
        Key("lattice", str, "square", ""),
        Key("eta", float, 1.0, "single-leg transmissivity"),
        Key("q", float, 0.0, "link failure probability"),
        Key("r", float, 1.0, "node working probability"),
        Key("p_c_bond", float, None, "override the reference bond threshold"),
        Key("p_c_site", float, None, "override the reference site threshold"),
    ],
    "export-lattice": [
        Key("lattice", str, "square", "lattice name or 'bravais'"),
        Key("rows", int, 8, ""),
        Key("cols", int, 8, ""),
        Key("edge_length", float, 1.0, "km"),
        Key("class_lengths", _float_list, None, "per-class lengths (inhomogeneous bases)"),
        Key("N", int, 5, "bravais only"),
        Key("M", int, 4, "bravais only"),
        Key("ell", float, 22.0, "bravais only"),
        Key("theta", float, math.pi / 4, "bravais only"),
    ],
}

STOCHASTIC = {"protocol", "percolate", "threshold"}
COMMANDS = tuple(SCHEMAS)


def _keys(command: str) -> dict[str, Key]:
    return {k.name: k for k in COMMON + SCHEMAS[command]}


def parse_config_text(text: str, command: str, source: str = "<config>") -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    keys = _keys(command)
    out: dict[str, Any] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value', got {raw.strip()!r}")
        name, value = (part.strip() for part in line.split("=", 1))
        if name == "command":
            if value != command:
                raise ConfigError(f"{source}:{line_no}: file is for {value!r}, not {command!r}")
            continue
        if name not in keys:
            raise ConfigError(f"{source}:{line_no}: unknown key {name!r} for {command}")
        if name in out:
            raise ConfigError(f"{source}:{line_no}: key {name!r} given twice")
        try:
            out[name] = keys[name].parse(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{line_no}: bad value for {name!r}: {exc}") from None
    return out


def resolve(command: str, file_values: dict, flag_values: dict) -> dict[str, Any]:
    keys = _keys(command)
    cfg = {name: key.default for name, key in keys.items()}
    cfg.update(file_values)
    cfg.update(flag_values)
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg['format']!r}")
    if command in STOCHASTIC and cfg["seed"] is None:
        raise ConfigError(f"{command} needs a seed (--seed or 'seed = ...')")
    return cfg


# --- artifacts -------------------------------------------------------------------

def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class Result:
    columns: Sequence[str]
    rows: list[Sequence[Any]]
    summary: dict[str, Any]
    text: str | None = None  # preformatted artifact (graph export)
    extension: str | None = None


def _csv_body(result: Result) -> str:
    lines = [",".join(result.columns)]
    lines += [",".join(_num(v) for v in row) for row in result.rows]
    return "\n".join(lines) + "\n"


def _artifact_path(out: str | None, command: str, ext: str) -> Path:
    if out:
        path = Path(out)
        return path if path.suffix else path.with_suffix("." + ext)
    base = Path(os.environ.get(OUTPUT_ENV) or ".")
    return base / f"{command}.{ext}"


def write_outputs(command: str, cfg: dict, result: Result, out: str | None, started: float, workers: int):
    ext = result.extension or cfg["format"]
    path = _artifact_path(out, command, ext)
    manifest = {
        "command": command,
        "config": _jsonable({k: v for k, v in cfg.items()}),
        "seed": cfg.get("seed"),
        "workers": workers,
        "version": __version__,
        "started_unix": started,
        "wall_clock_seconds": time.time() - started,
        "artifact": path.name,
        "summary": _jsonable(result.summary),
    }
    manifest_text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    digest = hashlib.sha256(manifest_text.encode()).hexdigest()
    if result.text is not None:
        lines = result.text.splitlines(keepends=True)
        body = lines[0] + f"# manifest_sha256={digest}\n" + "".join(lines[1:])
    elif ext == "csv":
        body = f"# manifest_sha256={digest}\n" + _csv_body(result)
    else:
        body = json.dumps(
            {
                "manifest_sha256": digest,
                "summary": _jsonable(result.summary),
                "columns": list(result.columns),
                "rows": _jsonable([list(r) for r in result.rows]),
            },
            indent=2,
            sort_keys=True,
        ) + "\n"
    manifest_path = path.with_name(path.name + ".manifest.json")
    _atomic_write(manifest_path, manifest_text)
    _atomic_write(path, body)
    return path, manifest_path


# --- commands ---------------------------------------------------------------------

def _builder(name: str):
    try:
        return lattice_builder(name)
    except LatticeNotAvailable as exc:
        raise ConfigError(str(exc.args[0])) from None
    except KeyError:
        raise ConfigError(f"unknown lattice {name!r}") from None


def _mode(cfg) -> str:
    if cfg["mode"] not in ("bond", "site"):
        raise ConfigError(f"mode must be bond or site, got {cfg['mode']!r}")
    return cfg["mode"]


def _ratios_for(cfg, mode: str):
    ratios = cfg.get("ratios")
    if ratios is None:
        return None
    if mode != "bond":
        raise ConfigError("ratios apply to bond percolation only")
    r = np.asarray(ratios, dtype=float)
    if np.any(r <= 0):
        raise ConfigError("ratios must be positive")

    def ratios_for(graph):
        if graph.num_classes != len(r) or graph.classes != tuple(range(1, len(r) + 1)):
            raise ConfigError(f"{graph.name} has classes {graph.classes}; got {len(r)} ratios")
        return r[graph.edge_classes - 1]

    return ratios_for


def cmd_yield(cfg, workers) -> Result:
    if (cfg["gamma"] is None) != (cfg["M"] is None):
        raise ConfigError("gamma and M must be given together")
    Ls = np.linspace(cfg["L_min"], cfg["L_max"], cfg["L_points"])
    if cfg["gamma"] is not None:
        rows = [("custom", cfg["gamma"], cfg["M"], float(L), N,
                 analytic_yield_by_span(N, cfg["M"], cfg["gamma"], cfg["alpha"], float(L), cfg["theta"]))
                for L in Ls for N in cfg["N"]]
    else:
        bad = [p for p in cfg["panels"] if p not in YIELD_PANELS]
        if bad:
            raise ConfigError(f"unknown panels {bad}; known: {sorted(YIELD_PANELS)}")
        rows = yield_surface(Ls, cfg["N"], cfg["panels"], cfg["theta"], cfg["alpha"])
    rows = [r + (repeaterless_rate(math.exp(-cfg["alpha"] * r[3])) if r[3] > 0 else math.inf,) for r in rows]
    return Result(("panel", "gamma", "M", "L_km", "N", "yield", "repeaterless_bound"), rows,
                  {"rows": len(rows)})


def cmd_protocol(cfg, workers) -> Result:
    try:
        config = BravaisConfig(cfg["N"], cfg["M"], cfg["ell"], cfg["theta"], cfg["alpha"], cfg["gamma"])
        if cfg["scenario"]:
            config = load_scenario(Path(cfg["scenario"]).read_text()).apply(config)
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg["rounds"] < 1:
        raise ConfigError("rounds must be >= 1")
    traced = trace_chains(config)
    est = estimate_yield(config, cfg["rounds"], cfg["seed"], traced.chains, workers, cfg["diagnostics"])
    rows = []
    for chain, rate in zip(traced.chains, est.per_chain_success):
        se = math.sqrt(rate * (1 - rate) / est.trials)
        rows.append(("chain", chain.x_branch, chain.y_branch, chain.num_terminals, rate, se,
                     chain_success_probability(chain.num_terminals, config.gamma, config.eta)))
    rows.append(("total", "", "", "", est.mean, est.std_error, est.analytic))
    summary = {
        "mean": est.mean, "std_error": est.std_error, "analytic": est.analytic, "rounds": est.trials,
        "chains": len(traced.chains), "frame_errors": est.frame_errors,
        "diagnostics": list(traced.diagnostics),
    }
    if cfg["diagnostics"]:
        summary.update(pair_losses=est.pair_losses, partial_arrivals=est.partial_arrivals)
    return Result(("kind", "x_branch", "y_branch", "terminals", "mean", "std_error", "analytic"), rows, summary)


def cmd_percolate(cfg, workers) -> Result:
    mode = _mode(cfg)
    builder = _builder(cfg["lattice"])
    if cfg["points"] < 2 or not 0 <= cfg["p_min"] < cfg["p_max"] <= 1:
        raise ConfigError("need 0 <= p_min < p_max <= 1 and points >= 2")
    ratios_for = _ratios_for(cfg, mode)
    grid = np.linspace(cfg["p_min"], cfg["p_max"], cfg["points"])
    rows = []
    for size in cfg["sizes"]:
        graph = builder(size)
        crit = critical_points(graph, mode, cfg["trials"], cfg["seed"], key=(size,),
                               ratios=ratios_for(graph) if ratios_for else None, workers=workers)
        for p in grid:
            frac, sigma = spanning_fraction(crit, float(p))
            rows.append((size, graph.rows, graph.cols, float(p), frac, sigma))
    return Result(("size", "rows", "cols", "p", "fraction", "sigma"), rows,
                  {"lattice": builder.lattice_name, "mode": mode})


def cmd_threshold(cfg, workers) -> Result:
    mode = _mode(cfg)
    builder = _builder(cfg["lattice"])
    if cfg["trials"] < 1 or not cfg["sizes"]:
        raise ConfigError("need trials >= 1 and at least one size")
    try:
        est = estimate_threshold(builder, mode, cfg["sizes"], cfg["trials"], cfg["seed"],
                                 _ratios_for(cfg, mode), workers)
    except ThresholdError as exc:
        raise NumericalFailure(str(exc), exc.diagnostics) from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = [("size", s, r, c, x, e) for s, (r, c), x, e in
            zip(cfg["sizes"], est.sizes, est.crossings, est.crossing_errors)]
    rows.append(("extrapolated", "", "", "", est.p_c_hat, est.uncertainty))
    ref = REFERENCE.get(builder.lattice_name)
    summary = {"lattice": est.lattice, "mode": mode, "p_c_hat": est.p_c_hat, "uncertainty": est.uncertainty,
               "trials_per_point": est.trials_per_point, "extrapolation_residual": est.extrapolation_residual}
    if ref is not None and cfg["ratios"] is None:
        summary["reference"] = ref.bond if mode == "bond" else ref.site
    if mode == "bond":
        summary["eta_c"] = eta_critical(est.p_c_hat)
    return Result(("kind", "size", "rows", "cols", "p", "sigma"), rows, summary)


def cmd_surface(cfg, workers) -> Result:
    try:
        surf = surface(cfg["lattice"])
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    try:
        if cfg["lengths"] is not None:
            if cfg["ratios"] is not None:
                raise ConfigError("give ratios or lengths, not both")
            profile = LengthProfile(cfg["lengths"], cfg["alpha"])
            res = critical_lengths(surf, profile)
            probs = list(res.probabilities)
            summary = {"surface": surf.lattice, "exact": surf.exact, "critical_scale": res.scale,
                       "unbounded": res.unbounded, "critical_lengths": list(res.lengths),
                       "probabilities": probs, "residual": res.residual}
        else:
            ratios = cfg["ratios"] if cfg["ratios"] is not None else (1.0,) * surf.arity
            if len(ratios) != surf.arity:
                raise ConfigError(f"{surf.lattice} needs {surf.arity} ratios, got {len(ratios)}")
            p = solve_scaled(surf, ratios) if cfg["ratios"] is not None else solve_homogeneous(surf)
            probs = [p**r for r in ratios]
            summary = {"surface": surf.lattice, "exact": surf.exact, "p_c": p,
                       "probabilities": probs, "residual": residual(surf, probs)}
    except RootError as exc:
        raise NumericalFailure(str(exc)) from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = [(k + 1, x) for k, x in enumerate(probs)]
    return Result(("class", "probability"), rows, summary)


def cmd_robustness(cfg, workers) -> Result:
    name = cfg["lattice"]
    try:
        ref = REFERENCE[canonical_name(name)]
    except KeyError:
        ref = None
    p_bond = cfg["p_c_bond"] if cfg["p_c_bond"] is not None else (ref.bond if ref else None)
    p_site = cfg["p_c_site"] if cfg["p_c_site"] is not None else (ref.site if ref else None)
    if p_bond is None or p_site is None:
        raise ConfigError(f"no reference thresholds for {name!r}; give p_c_bond and p_c_site")
    try:
        verdict = robustness_region(RobustnessQuery(cfg["eta"], cfg["q"], cfg["r"], p_bond, p_site))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    summary = {"robust": verdict.robust, "margin": verdict.margin, "bond_margin": verdict.bond_margin,
               "site_margin": verdict.site_margin, "p_c_bond": p_bond, "p_c_site": p_site,
               "eta_c": eta_critical(p_bond)}
    return Result(("robust", "margin", "bond_margin", "site_margin"),
                  [(verdict.robust, verdict.margin, verdict.bond_margin, verdict.site_margin)], summary)


def cmd_export(cfg, workers) -> Result:
    name = cfg["lattice"]
    try:
        if name.lower() == "bravais":
            graph = build_bravais(BravaisConfig(cfg["N"], cfg["M"], cfg["ell"], cfg["theta"]))
        elif cfg["class_lengths"] is not None:
            base = "bowtie-I" if name.lower().replace("_", "-") in ("bowtie-i", "bow-tie-i") else name.lower()
            if base not in INHOMOGENEOUS_BASES:
                raise ConfigError(f"class_lengths need one of {sorted(INHOMOGENEOUS_BASES)}")
            graph = build_inhomogeneous(base, cfg["class_lengths"], cfg["rows"], cfg["cols"])
        else:
            graph = build_patch(unit_cell(name), cfg["rows"], cfg["cols"], cfg["edge_length"])
    except LatticeNotAvailable as exc:
        raise ConfigError(str(exc.args[0])) from None
    except KeyError:
        raise ConfigError(f"unknown lattice {name!r}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    summary = {"lattice": graph.name, "nodes": graph.num_nodes, "edges": graph.num_edges,
               "classes": graph.num_classes, "metric_override": graph.metric_override}
    return Result((), [], summary, text=dump_graph(graph), extension="graph")


HANDLERS = {
    "yield": cmd_yield,
    "protocol": cmd_protocol,
    "percolate": cmd_percolate,
    "threshold": cmd_threshold,
    "surface": cmd_surface,
    "robustness": cmd_robustness,
    "export-lattice": cmd_export,
}


def run(command: str, cfg: dict, out: str | None = None, workers: int = 1) -> tuple[Path, Path, Result]:
    started = time.time()
    result = HANDLERS[command](cfg, workers)
    path, manifest = write_outputs(command, cfg, result, out, started, workers)
    return path, manifest, result


# --- argument parsing ----------------------------------------------------------------

def _default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entanglenet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", help="flat key = value file; flags override it")
        p.add_argument("--out", help=f"artifact path (default: ${OUTPUT_ENV} or cwd)")
        p.add_argument("--workers", type=int, default=None, help="worker threads")
        for key in COMMON + SCHEMAS[command]:
            flag = "--" + key.name.replace("_", "-")
            p.add_argument(flag, dest="key_" + key.name, default=None, metavar="VALUE",
                           help=key.help or None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        file_values = {}
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            file_values = parse_config_text(text, command, args.config)
        flag_values = {}
        keys = _keys(command)
        for name, key in keys.items():
            raw = getattr(args, "key_" + name)
            if raw is None:
                continue
            try:
                flag_values[name] = key.parse(raw)
            except ValueError as exc:
                raise ConfigError(f"--{name.replace('_', '-')}: {exc}") from None
        cfg = resolve(command, file_values, flag_values)
        workers = args.workers if args.workers is not None else _default_workers()
        if workers < 1:
            raise ConfigError("--workers must be >= 1")
        path, manifest, result = run(command, cfg, args.out, workers)
    except ConfigError as exc:
        print(f"entanglenet {command}: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        payload = {"error": str(exc), "diagnostics": _jsonable(exc.payload)}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return 3
    if command == "surface":
        print(json.dumps(_jsonable(result.summary), sort_keys=True))
    else:
        print(json.dumps({"artifact": str(path), "manifest": str(manifest),
                          "summary": _jsonable(result.summary)}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
