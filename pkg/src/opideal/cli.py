"""Batch runner: one JSON config in, one JSON or CSV report out.

    opideal --config run.json [--seed N] [--restarts N] [--tolerance T]
            [--format json|csv] [--out report.json] [--timing]
    opideal validate-oracles
    opideal --print-schema

Exit status: 0 on success, 2 when the config is malformed or out of range,
3 when an estimation fails (including a failed oracle validation).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import logging
import math
import sys
import time

import jsonschema

from . import __version__
from .errors import DegenerateFamilyError, EstimationError, OpIdealError, SearchError
from .kernels import BACKEND
from .measures import AtomicMeasure
from .oracles import known_oracle
from .optim import SearchConfig
from .rs_core import (
    amplification_sides,
    amplify_witness,
    finite_toy_system,
    rs_constant_lb,
    sigma_system,
)
from .sigma_summing import SummingParams, corollary_inclusion_check, pi_norm_lb
from .spaces import Operator
from .validation import validate_oracles
from .vvfun import SimpleFunction, composition_norm_lb, convex_seminorm_search, phi_search

log = logging.getLogger("opideal")

COMMANDS = ("norm", "phi", "convex", "compose", "inclusion", "rs-demo", "sweep", "validate-oracles")

# one column layout for every command; blank cells mean "not applicable"
CSV_COLUMNS = (
    "command", "label", "q", "p", "sigma", "value", "oracle", "oracle_label", "oracle_kind",
    "verdict", "family_size", "evaluations", "seconds", "seed", "config_hash",
)

EXIT_OK, EXIT_CONFIG, EXIT_ESTIMATION = 0, 2, 3

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vector = {"type": "array", "items": _num, "minItems": 1}
_matrix = {"type": "array", "items": _vector, "minItems": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "opideal experiment config",
    "type": "object",
    "required": ["command"],
    "$defs": {
        "space": {
            "type": "object",
            "required": ["dim", "r"],
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "r": {"oneOf": [{"type": "number", "minimum": 1}, {"const": "inf"}]},
                "weights": {"type": "array", "items": _pos, "minItems": 1},
            },
            "additionalProperties": False,
        },
        "measure": {
            "type": "object",
            "required": ["weights"],
            "properties": {"weights": {"type": "array", "items": _pos, "minItems": 1}},
            "additionalProperties": False,
        },
        "operator": {
            "type": "object",
            "required": ["matrix", "domain", "codomain"],
            "properties": {
                "matrix": _matrix,
                "domain": {"$ref": "#/$defs/space"},
                "codomain": {"$ref": "#/$defs/space"},
            },
            "additionalProperties": False,
        },
        "function": {
            "type": "object",
            "required": ["measure", "values", "codomain"],
            "properties": {
                "measure": {"$ref": "#/$defs/measure"},
                "values": _matrix,
                "codomain": {"$ref": "#/$defs/space"},
            },
            "additionalProperties": False,
        },
        "params": {
            "type": "object",
            "required": ["q", "p"],
            "properties": {"q": {"type": "number", "minimum": 1}, "p": {"type": "number", "minimum": 1},
                           "sigma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}},
            "additionalProperties": False,
        },
        "search": {
            "type": "object",
            "properties": {
                "restarts": {"type": "integer", "minimum": 1},
                "iterations": {"type": "integer", "minimum": 1},
                "step": _pos,
                "decay": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "epsilon": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "system": {
            "type": "object",
            "required": ["name"],
            "properties": {
                "name": {"enum": ["sigma", "finite-toy"]},
                "sigma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "atoms": {"type": "integer", "minimum": 1},
                "points": _matrix,
                "measure": {"$ref": "#/$defs/measure"},
            },
            "additionalProperties": False,
        },
    },
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "search": {"$ref": "#/$defs/search"},
        "tolerance": _pos,
        "format": {"enum": ["json", "csv"]},
        "out": {"type": "string"},
        "k_max": {"type": "integer", "minimum": 1},
        "operator": {"$ref": "#/$defs/operator"},
        "params": {"$ref": "#/$defs/params"},
        "params1": {"$ref": "#/$defs/params"},
        "params2": {"$ref": "#/$defs/params"},
        "function": {"$ref": "#/$defs/function"},
        "measure": {"$ref": "#/$defs/measure"},
        "system": {"$ref": "#/$defs/system"},
        "p": {"type": "number", "minimum": 1},
        "q": {"type": "number", "minimum": 1},
        "sigma": {"type": "number", "minimum": 0, "maximum": 1},
        "m": {"type": "integer", "minimum": 1},
        "m_parts": {"type": "integer", "minimum": 1},
        # split every atom into 2**refine equal atoms before computing
        "refine": {"type": "integer", "minimum": 0, "maximum": 10},
        "amplify": {
            "type": "object",
            "required": ["q1", "q2", "p1", "p2"],
            "properties": {k: {"type": "number", "minimum": 1} for k in ("q1", "q2", "p1", "p2")},
            "additionalProperties": False,
        },
        "grid": {
            "type": "object",
            "required": ["q", "p", "sigma"],
            "properties": {k: {"type": "array", "items": _num} for k in ("q", "p", "sigma")},
            "additionalProperties": False,
        },
        "points": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}},
    },
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"command": {"const": c}}}, "then": {"required": req}}
        for c, req in (
            ("norm", ["operator", "params"]),
            ("phi", ["function", "p", "sigma"]),
            ("convex", ["function", "p", "sigma", "m"]),
            ("compose", ["operator", "sigma", "measure"]),
            ("inclusion", ["operator", "params1", "params2"]),
            ("rs-demo", ["operator", "system", "q", "p"]),
            ("sweep", ["operator"]),
        )
    ] + [
        {"if": {"properties": {"command": {"const": "sweep"}}},
         "then": {"oneOf": [{"required": ["grid"]}, {"required": ["points"]}]}},
    ],
}


class ConfigError(Exception):
    """Raised for any config problem; maps to exit status 2."""


# ---------------------------------------------------------------- locating errors

def _skip_ws(text, i):
    while i < len(text) and text[i] in " \t\r\n":
        i += 1
    return i


def _locate(text: str, path) -> int:
    """Character offset of the JSON value at ``path`` (deepest existing prefix)."""
    dec = json.JSONDecoder()
    i = _skip_ws(text, 0)
    for key in path:
        if i >= len(text):
            break
        if text[i] == "{" and isinstance(key, str):
            j = _skip_ws(text, i + 1)
            found = None
            while j < len(text) and text[j] != "}":
                k, j = dec.raw_decode(text, j)
                j = _skip_ws(text, j) + 1  # colon
                j = _skip_ws(text, j)
                if k == key:
                    found = j
                    break
                _, j = dec.raw_decode(text, j)
                j = _skip_ws(text, j)
                if text[j] == ",":
                    j = _skip_ws(text, j + 1)
            if found is None:
                break
            i = found
        elif text[i] == "[" and isinstance(key, int):
            j = _skip_ws(text, i + 1)
            for _ in range(key):
                _, j = dec.raw_decode(text, j)
                j = _skip_ws(text, j)
                if text[j] == ",":
                    j = _skip_ws(text, j + 1)
            i = j
        else:
            break
    return i


def _line_of(text: str, path) -> int:
    return text.count("\n", 0, _locate(text, list(path))) + 1


def parse_config(text: str, source: str = "<config>") -> dict:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}: invalid JSON: {e.msg}") from None
    check_config(cfg, text, source)
    return cfg


def check_config(cfg, text: str | None = None, source: str = "<config>"):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if not errors:
        return
    lines = []
    for e in errors:
        path = list(e.absolute_path)
        where = "/".join(map(str, path)) or "(top level)"
        line = _line_of(text, path) if text is not None else 1
        lines.append(f"{source}:{line}: {where}: {e.message}")
    raise ConfigError("\n".join(lines))


# ---------------------------------------------------------------- building inputs

def _operator(d) -> Operator:
    return Operator.from_dict(d)


def _params(d) -> SummingParams:
    return SummingParams(d["q"], d["p"], d.get("sigma", 0.0))


def _search(cfg) -> SearchConfig:
    return SearchConfig.from_dict({**cfg.get("search", {}), "seed": cfg.get("seed", 0)})


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in cfg.items() if k != "out"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _row(command, label, value, *, params=None, oracle=None, verdict=None, family_size=None,
         evaluations=None, seconds=None):
    q = p = sigma = None
    if params is not None:
        q, p, sigma = params.q, params.p, params.sigma
    return {
        "command": command, "label": label, "q": q, "p": p, "sigma": sigma, "value": value,
        "oracle": None if oracle is None else oracle.value,
        "oracle_label": None if oracle is None else oracle.label,
        "oracle_kind": None if oracle is None else oracle.kind,
        "verdict": verdict, "family_size": family_size, "evaluations": evaluations,
        "seconds": seconds,
    }


# ---------------------------------------------------------------- commands

def _cmd_norm(cfg, search, timing):
    u = _operator(cfg["operator"])
    params = _params(cfg["params"])
    t0 = time.perf_counter()
    rep = pi_norm_lb(u, params, cfg.get("k_max"), search)
    dt = time.perf_counter() - t0 if timing else None
    row = _row("norm", "pi_norm_lb", rep.value, params=params, oracle=rep.oracle,
               family_size=rep.telemetry["best_family_size"], evaluations=rep.evaluations, seconds=dt)
    return {"estimate": rep.to_dict()}, [row]


def _cmd_sweep(cfg, search, timing):
    u = _operator(cfg["operator"])
    if "grid" in cfg:
        g = cfg["grid"]
        points = list(itertools.product(g["q"], g["p"], g["sigma"]))
    else:
        points = [tuple(pt) for pt in cfg["points"]]
    if not points:
        raise ConfigError("sweep: the parameter grid is empty")
    try:
        grid = [SummingParams(q, p, s) for q, p, s in points]
    except OpIdealError as e:
        raise ConfigError(f"sweep: grid point out of range: {e}") from None
    rows, estimates = [], []
    for params in grid:
        t0 = time.perf_counter()
        rep = pi_norm_lb(u, params, cfg.get("k_max"), search)
        dt = time.perf_counter() - t0 if timing else None
        estimates.append({"params": params.to_dict(), "estimate": rep.to_dict()})
        rows.append(_row("sweep", "pi_norm_lb", rep.value, params=params, oracle=rep.oracle,
                         family_size=rep.telemetry["best_family_size"], evaluations=rep.evaluations,
                         seconds=dt))
    return {"estimates": estimates}, rows


def _function(cfg) -> SimpleFunction:
    return SimpleFunction.from_dict(cfg["function"]).refine(cfg.get("refine", 0))


def _cmd_phi(cfg, search, timing):
    f = _function(cfg)
    p, sigma = float(cfg["p"]), float(cfg["sigma"])
    rep = phi_search(f, p, sigma, search)
    row = _row("phi", "phi_seminorm", rep.value, evaluations=rep.evaluations)
    row.update(p=p, sigma=sigma)
    return {"estimate": rep.to_dict()}, [row]


def _cmd_convex(cfg, search, timing):
    f = _function(cfg)
    p, sigma, m = float(cfg["p"]), float(cfg["sigma"]), int(cfg["m"])
    phi = phi_search(f, p, sigma, search)
    value, dec = convex_seminorm_search(f, p, sigma, m, search)
    rows = [_row("convex", "phi_seminorm", phi.value), _row("convex", f"convex_seminorm_ub m={m}", value)]
    for r in rows:
        r.update(p=p, sigma=sigma)
    return {"phi": phi.to_dict(), "upper_bound": value,
            "decomposition": [part.to_dict() for part in dec.parts]}, rows


def _cmd_compose(cfg, search, timing):
    u = _operator(cfg["operator"])
    sigma = float(cfg["sigma"])
    mu = AtomicMeasure.from_dict(cfg["measure"]).refine(cfg.get("refine", 0))
    rep = composition_norm_lb(u, sigma, mu, int(cfg.get("m_parts", 2)), search)
    row = _row("compose", "composition_norm_lb", rep.value, oracle=rep.oracle, evaluations=rep.evaluations)
    row.update(q=1.0, p=1.0, sigma=sigma)
    return {"estimate": rep.to_dict()}, [row]


def _cmd_inclusion(cfg, search, timing):
    u = _operator(cfg["operator"])
    p1, p2 = _params(cfg["params1"]), _params(cfg["params2"])
    tol = float(cfg.get("tolerance", 1e-6))
    rep = corollary_inclusion_check(u, p1, p2, cfg.get("k_max"), search, tol)
    rows = [
        _row("inclusion", "side 1", rep.estimate1.value, params=p1, oracle=rep.estimate1.oracle,
             family_size=rep.estimate1.telemetry["best_family_size"], evaluations=rep.estimate1.evaluations),
        _row("inclusion", "side 2", rep.estimate2.value, params=p2, oracle=rep.estimate2.oracle,
             verdict=rep.verdict, family_size=rep.estimate2.telemetry["best_family_size"],
             evaluations=rep.estimate2.evaluations),
    ]
    return {"inclusion": rep.to_dict()}, rows


def _cmd_rs_demo(cfg, search, timing):
    u = _operator(cfg["operator"])
    q, p = float(cfg["q"]), float(cfg["p"])
    sd = cfg["system"]
    sigma = None
    if sd["name"] == "sigma":
        sigma = float(sd.get("sigma", 0.0))
        atoms = int(sd.get("atoms", 2 * u.domain.dim))
        system = sigma_system(u.domain, sigma, atoms)
    else:
        if "points" not in sd:
            raise ConfigError("rs-demo: the finite-toy system needs 'points'")
        mu = AtomicMeasure.from_dict(sd["measure"]) if "measure" in sd else AtomicMeasure.counting(
            int(sd.get("atoms", 2 * u.domain.dim)))
        system = finite_toy_system(u.domain, sd["points"], mu)
    k_max = cfg.get("k_max", len(system.measure))
    rep = rs_constant_lb(system, u, q, p, k_max, search)
    oracle = None
    if system.name == "sigma":
        # (q, p) RS exponents correspond to summing params (q(1-s), p(1-s), s)
        qs, ps = q * (1.0 - sigma), p * (1.0 - sigma)
        if 1.0 <= ps <= qs:
            oracle = known_oracle(u, qs, ps, sigma)
    result = {"system": system.name, "estimate": rep.to_dict()}
    rows = [_row("rs-demo", f"rs_constant_lb {system.name}", rep.value, oracle=oracle,
                 family_size=rep.telemetry["best_support"], evaluations=rep.evaluations)]
    rows[0].update(q=q, p=p, sigma=sigma)
    if "amplify" in cfg:
        a = cfg["amplify"]
        w = rep.witness
        left, right = amplification_sides(system, u, w.f, w.g, a["q1"], a["q2"])
        amp = amplify_witness(system, u, w, a["q1"], a["q2"], a["p1"], a["p2"], search)
        result["amplification"] = {"exponents": a, "sum_q1_amplified": left, "sum_q2_original": right,
                                   "witness": amp.to_dict()}
        rows.append(_row("rs-demo", "amplified witness ratio", amp.ratio))
        rows[-1].update(q=a["q1"], p=a["p1"])
    return result, rows


def _cmd_validate(cfg, search, timing):
    tol = float(cfg.get("tolerance", 1e-3))
    checks = validate_oracles(search.seed, tol)
    rows = []
    for c in checks:
        rows.append(_row("validate-oracles", c.name, c.brute, verdict="PASS" if c.passed else "FAIL"))
        rows[-1]["oracle"] = c.oracle
        rows[-1]["oracle_kind"] = "exact" if c.mode == "attained" else "upper"
    result = {"tolerance": tol, "checks": [c.to_dict() for c in checks],
              "passed": all(c.passed for c in checks)}
    return result, rows


HANDLERS = {
    "norm": _cmd_norm,
    "phi": _cmd_phi,
    "convex": _cmd_convex,
    "compose": _cmd_compose,
    "inclusion": _cmd_inclusion,
    "rs-demo": _cmd_rs_demo,
    "sweep": _cmd_sweep,
    "validate-oracles": _cmd_validate,
}


# ---------------------------------------------------------------- reports

def run(cfg: dict, timing: bool = False) -> tuple[dict, int]:
    """Execute a validated config; returns (report, exit status)."""
    search = _search(cfg)
    chash = config_hash(cfg)
    t0 = time.perf_counter()
    result, rows = HANDLERS[cfg["command"]](cfg, search, timing)
    wall = time.perf_counter() - t0
    log.info("%s finished in %.3f s", cfg["command"], wall)
    for r in rows:
        r["seed"] = search.seed
        r["config_hash"] = chash
    report = {
        "tool": "opideal",
        "version": __version__,
        "backend": BACKEND,
        "command": cfg["command"],
        "seed": search.seed,
        "config_hash": chash,
        "config": {k: v for k, v in cfg.items() if k != "out"},
        "search": search.to_dict(),
        "result": result,
        "rows": rows,
        "wall_clock_seconds": wall if timing else None,
    }
    status = EXIT_OK
    if cfg["command"] == "validate-oracles" and not result["passed"]:
        status = EXIT_ESTIMATION
    return report, status


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def format_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def format_json(report) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def _finite_or_str(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _finite_or_str(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_finite_or_str(x) for x in v]
    return v


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="opideal", description="Estimate summing-type operator norms.")
    ap.add_argument("command", nargs="?", choices=COMMANDS,
                    help="overrides the config's command; validate-oracles needs no config")
    ap.add_argument("--config", help="JSON experiment config")
    ap.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    ap.add_argument("--out", help="report path (default: stdout)")
    ap.add_argument("--format", choices=("json", "csv"))
    ap.add_argument("--restarts", type=int)
    ap.add_argument("--tolerance", type=float)
    ap.add_argument("--timing", action="store_true",
                    help="record wall-clock seconds in the report (breaks byte-identical reruns)")
    ap.add_argument("--print-schema", action="store_true", help="print the config JSON schema and exit")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> dict:
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"{args.config}: {e.strerror}") from None
        cfg = parse_config(text, args.config)
    elif args.command:
        cfg = {"command": args.command}
    else:
        raise ConfigError("give --config or a command")
    if args.command:
        cfg["command"] = args.command
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.restarts is not None:
        cfg["search"] = {**cfg.get("search", {}), "restarts": args.restarts}
    if args.tolerance is not None:
        cfg["tolerance"] = args.tolerance
    if args.format:
        cfg["format"] = args.format
    if args.out:
        cfg["out"] = args.out
    # flags are checked against the same schema as the file
    check_config(cfg, None, "<flags>")
    cfg.setdefault("seed", 0)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if args.print_schema:
        sys.stdout.write(json.dumps(SCHEMA, indent=2) + "\n")
        return EXIT_OK
    try:
        cfg = load_config(args)
        report, status = run(cfg, timing=args.timing)
    except ConfigError as e:
        print(f"opideal: config error\n{e}", file=sys.stderr)
        return EXIT_CONFIG
    except (EstimationError, SearchError, DegenerateFamilyError) as e:
        print(f"opideal: estimation failed: {e}", file=sys.stderr)
        return EXIT_ESTIMATION
    except OpIdealError as e:
        print(f"opideal: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    fmt = cfg.get("format", "json")
    text = format_csv(report["rows"]) if fmt == "csv" else format_json(_finite_or_str(report))
    out = cfg.get("out")
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if status == EXIT_ESTIMATION:
        print("opideal: oracle validation FAILED", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
