"""Command-line front end: ``fejerlab <command> [--config FILE] [--seed N] [--out DIR] [--threads N]``.

Each run resolves its configuration (built-in defaults, then the TOML file,
then ``FEJERLAB_*`` environment variables, then command-line flags),
validates it against the command's JSON schema and writes its tables to
``<out>/<command>-<hash>/`` where ``hash`` identifies the resolved
configuration. ``manifest.json`` lists every output with its SHA-256;
``run_record.json`` adds versions and wall time and is therefore the only
file that differs between reruns.

Exit codes: 0 success, 1 a configured acceptance threshold was missed
(outputs are still written), 2 invalid input.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import os
import platform
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, estimation, fejer, graph_core, kernels, processes, wick

SCHEMA_VERSION = 1
ENV_PREFIX = "FEJERLAB_"
EXIT_OK, EXIT_THRESHOLD, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Invalid configuration or unreadable input; maps to exit code 2."""


# ------------------------------------------------------------ schemas and defaults

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_T_LIST = {"type": "array", "items": _POS_INT, "minItems": 1}
_RATIONAL = {"oneOf": [{"type": "number"}, {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}]}
_SYMBOL = {"type": "object", "required": ["family"], "properties": {"family": {"type": "string"}}}
_INNOVATION = {
    "type": "object",
    "properties": {
        "family": {"enum": ["gaussian", "gamma", "two-point"]},
        "variance": {"type": "number", "exclusiveMinimum": 0},
        "shape": {"type": "number", "exclusiveMinimum": 0},
        "rate": {"type": "number", "exclusiveMinimum": 0},
        "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
    "additionalProperties": False,
}

SECTION_SCHEMAS = {
    "szego": {
        "type": "object",
        "properties": {
            "cycle": {"type": "integer", "minimum": 2},
            "edges": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                                 "minItems": 2, "maxItems": 2}, "minItems": 1},
            "symbols": {"type": "array", "items": _SYMBOL, "minItems": 1},
            "T": _T_LIST,
            "points": _POS_INT,
            "threshold": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["symbols", "T"],
        "additionalProperties": False,
    },
    "polytope": {
        "type": "object",
        "properties": {
            "matrix": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
            "edges": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                                 "minItems": 2, "maxItems": 2}},
            "case": {"type": "string"},
            "z": {"type": "array", "items": _RATIONAL},
            "vertices": {"type": "boolean"},
            "family": {
                "type": "object",
                "properties": {
                    "kind": {"enum": ["sum", "bilinear"]},
                    "m": _POS_INT, "n": _POS_INT, "k": _POS_INT,
                    "z": {"oneOf": [_RATIONAL, {"type": "array", "items": _RATIONAL}]},
                },
                "required": ["kind", "m", "k", "z"],
                "additionalProperties": False,
            },
        },
        "additionalProperties": False,
    },
    "clt": {
        "type": "object",
        "properties": {
            "functional": {"enum": ["quadratic", "sum"]},
            "T": _POS_INT,
            "replicas": {"type": "integer", "minimum": 2},
            "l": {"type": "integer", "minimum": 1, "maximum": 6},
            "bhat": {"type": "array", "items": _NUM, "minItems": 1},
            "model": {
                "type": "object",
                "properties": {"kind": {"enum": ["ar1", "ma"]}, "phi": _NUM,
                               "coeffs": {"type": "array", "items": _NUM, "minItems": 1}},
                "required": ["kind"],
                "additionalProperties": False,
            },
            "innovation": _INNOVATION,
            "threshold": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["functional", "T", "replicas", "model"],
        "additionalProperties": False,
    },
    "fit": {
        "type": "object",
        "properties": {
            "contrast": {"enum": ["whittle", "ibragimov"]},
            "series": {"type": "string"},
            "periodogram": {"type": "string"},
            "synthetic": {
                "type": "object",
                "properties": {"alpha": _NUM, "gamma": _NUM, "c": _NUM, "n": _POS_INT,
                               "step": {"type": "number", "exclusiveMinimum": 0}, "innovation": _INNOVATION},
                "required": ["alpha", "gamma", "n", "step"],
                "additionalProperties": False,
            },
            "weight": {"type": "object", "properties": {"a": _NUM, "b": _NUM}, "required": ["a", "b"],
                       "additionalProperties": False},
            "bounds": {"type": "object", "additionalProperties": {"type": "array", "items": _NUM,
                                                                   "minItems": 2, "maxItems": 2}},
            "starts": _POS_INT,
            "conditions": {"type": "boolean"},
            "d4_ratio": _NUM,
        },
        "required": ["contrast", "weight"],
        "additionalProperties": False,
    },
    "diagrams": {
        "type": "object",
        "properties": {
            "table": {"type": "string", "pattern": r"^\d+x\d+$"},
            "rows": {"type": "array", "items": _POS_INT, "minItems": 1},
            "mode": {"enum": list(wick.MODES)},
            "gaussian": {"type": "boolean"},
            "dump": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "kernels": {
        "type": "object",
        "properties": {
            "T": _T_LIST,
            "p": {"type": "array", "items": {"type": "number", "minimum": 1}, "minItems": 1},
            "domain": {"enum": ["torus", "line"]},
            "property_T": _T_LIST,
        },
        "additionalProperties": False,
    },
}

DEFAULTS = {
    "szego": {"symbols": [{"family": "ar1", "phi": 0.5}, {"family": "ar1", "phi": 0.5}],
              "cycle": 2, "T": [256, 512, 1024, 2048, 4096]},
    "polytope": {"matrix": [[1, 0, 1, 1], [0, 1, 1, -1]], "case": "C3", "z": [0, 1, "1/2", "1/2"],
                 "vertices": True},
    "clt": {"functional": "quadratic", "T": 4096, "replicas": 500, "bhat": [0.25, 0.5, 0.25],
            "l": 2, "model": {"kind": "ar1", "phi": 0.5}, "innovation": {"family": "gaussian"}},
    "fit": {"contrast": "whittle", "weight": {"a": 4.0, "b": 1.5}, "starts": 5, "conditions": True,
            "synthetic": {"alpha": 0.2, "gamma": 1.0, "c": 1.0, "n": 8192, "step": 0.125}},
    "diagrams": {"table": "2x2", "mode": "wick-cumulant", "gaussian": True, "dump": True},
    "kernels": {"T": [64, 256, 1024], "p": [1, 2, 4], "domain": "torus", "property_T": [64, 256, 1024]},
}

STOCHASTIC = {"clt", "fit"}
# mutually exclusive input sources per command
SOURCE_KEYS = {
    "szego": ("cycle", "edges"),
    "polytope": ("matrix", "edges"),
    "fit": ("series", "periodogram", "synthetic"),
}
# defaults that only make sense with the default source
TIED_KEYS = {"polytope": ("z",)}


def full_schema(command: str) -> dict:
    return {
        "type": "object",
        "properties": {
            "schema_version": {"const": SCHEMA_VERSION},
            "seed": {"type": "integer", "minimum": 0},
            "threads": _POS_INT,
            command: SECTION_SCHEMAS[command],
        },
        "required": ["schema_version", command],
    }


# ------------------------------------------------------------ configuration

def _parse_env_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def env_overrides(environ: dict) -> dict:
    """``FEJERLAB_SEED=3`` and ``FEJERLAB_CLT__REPLICAS=100`` style overrides."""
    out: dict = {}
    for key, val in sorted(environ.items()):
        if not key.startswith(ENV_PREFIX):
            continue
        path = key[len(ENV_PREFIX):].lower().split("__")
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = _parse_env_value(val)
    return out


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(command: str, path: str | None, seed: int | None, threads: int | None,
                environ: dict | None = None) -> dict:
    cfg = {"schema_version": SCHEMA_VERSION, "threads": 1, command: DEFAULTS[command]}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            user = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise InputError(f"config {path}: {exc}") from None
        cfg = _merge(cfg, user)
    env = env_overrides(os.environ if environ is None else environ)
    cfg = _merge(cfg, env)
    # an input source given by the user replaces the default one
    given = {**(user.get(command, {}) if path is not None else {}), **env.get(command, {})}
    sources = SOURCE_KEYS.get(command, ())
    if any(k in given for k in sources):
        for k in sources + TIED_KEYS.get(command, ()):
            if k not in given:
                cfg[command].pop(k, None)
    if seed is not None:
        cfg["seed"] = seed
    if threads is not None:
        cfg["threads"] = threads
    # sections of other commands are ignored
    cfg = {k: v for k, v in cfg.items() if k in ("schema_version", "seed", "threads", command)}
    validate(command, cfg)
    return cfg


def validate(command: str, cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, full_schema(command))
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"invalid config at {where}: {exc.message}") from None
    if command in SOURCE_KEYS:
        keys = SOURCE_KEYS[command]
        sources = [k for k in keys if k in cfg[command]]
        # polytope may run on a family alone
        allowed = (0, 1) if command == "polytope" else (1,)
        if len(sources) not in allowed:
            amount = "at most" if command == "polytope" else "exactly"
            raise InputError(f"{command} takes {amount} one of {', '.join(keys)} (got {sources})")
    if command in STOCHASTIC and "seed" not in cfg:
        if not (command == "fit" and "synthetic" not in cfg[command]):
            raise InputError(f"command {command!r} is stochastic and needs a seed (--seed or seed = N)")


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


# ------------------------------------------------------------ output helpers

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def csv_table(header: list[str], rows) -> str:
    def fmt(v):
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)

    lines = [",".join(header)] + [",".join(fmt(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


class RunWriter:
    """Collects named outputs and writes them with a manifest."""

    def __init__(self):
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def write(self, out_dir: Path, command: str, cfg: dict, wall: float, status: str) -> Path:
        run_dir = out_dir / f"{command}-{config_hash(cfg)}"
        run_dir.mkdir(parents=True, exist_ok=True)
        manifest = {"command": command, "config": cfg, "config_hash": config_hash(cfg), "status": status,
                    "outputs": {}}
        for name, text in sorted(self.files.items()):
            (run_dir / name).write_text(text)
            manifest["outputs"][name] = hashlib.sha256(text.encode()).hexdigest()
        (run_dir / "manifest.json").write_text(dumps(manifest))
        import scipy

        record = {"config_hash": config_hash(cfg), "wall_time_s": wall, "status": status,
                  "versions": {"fejerlab": __version__, "python": platform.python_version(),
                               "numpy": np.__version__, "scipy": scipy.__version__},
                  "outputs": sorted(manifest["outputs"])}
        (run_dir / "run_record.json").write_text(dumps(record))
        return run_dir


# ------------------------------------------------------------ commands

def _matrix_from(sec: dict) -> graph_core.IncidenceLikeMatrix:
    if "matrix" in sec:
        return graph_core.IncidenceLikeMatrix.from_array(sec["matrix"])
    if "edges" in sec:
        edges = [tuple(e) for e in sec["edges"]]
        n_v = max(max(e) for e in edges) + 1
        return graph_core.IncidenceLikeMatrix.from_edges(n_v, edges)
    if "cycle" in sec:
        return graph_core.cycle_graph(sec["cycle"])
    raise InputError("give a matrix, an edge list or a cycle length")


def cmd_szego(cfg: dict, out: RunWriter) -> bool:
    sec = cfg["szego"]
    M = _matrix_from(sec)
    symbols = [fejer.symbol_from_dict(s) for s in sec["symbols"]]
    if len(symbols) != M.n_cols:
        raise InputError(f"{len(symbols)} symbols for {M.n_cols} edges")
    rep = fejer.szego_limit_check(M, symbols, sec["T"], sec.get("points"))
    out.add("szego.csv", rep.to_csv())
    final = rep.rel_errors[-1]
    ok = final <= sec.get("threshold", math.inf)
    out.add("report.json", dumps({"final_rel_error": final, "tail_monotone": rep.tail_monotone(),
                                  "threshold": sec.get("threshold"), "pass": ok}))
    return ok


def _rational(v) -> Fraction:
    return Fraction(v) if isinstance(v, str) else Fraction(v).limit_denominator(10 ** 9)


def cmd_polytope(cfg: dict, out: RunWriter) -> bool:
    sec = cfg["polytope"]
    report: dict = {}
    if "matrix" in sec or "edges" in sec:
        M = _matrix_from(sec)
        case = graph_core._as_case(sec.get("case", "C1"))
        report["matrix"] = M.to_array().tolist()
        report["case"] = case.value
        report["rank"] = graph_core.rank(M)
        if "z" in sec:
            z = [_rational(v) for v in sec["z"]]
            mem = graph_core.pcp_membership(M, z, case)
            forms = graph_core.alpha_forms(M, z)
            report["z"] = z
            report["member"] = mem.member
            report["witness"] = mem.witness
            report["reason"] = mem.reason
            report["alpha"] = {"dual_form": forms[0], "rank_form": forms[1]}
        if sec.get("vertices"):
            verts = graph_core.pcp_vertices(M, case)
            report["vertices"] = verts
            out.add("vertices.csv", csv_table([f"z{j}" for j in range(M.n_cols)], verts))
    if "family" in sec:
        fam = sec["family"]
        z = fam["z"]
        z = [_rational(v) for v in z] if isinstance(z, list) else _rational(z)
        chk = graph_core.cumulant_inequality_check(fam["kind"], z, fam["k"], fam["m"], fam.get("n"))
        report["family"] = {"kind": fam["kind"], "m": fam["m"], "n": fam.get("n"), "k": fam["k"], "z": z,
                            "alpha": chk.alpha, "bound": chk.bound, "holds": chk.holds, "strict": chk.strict,
                            "n_graphs": chk.n_graphs, "facet": chk.facet}
    out.add("polytope.json", dumps(report))
    return True


def _innovation(d: dict | None) -> processes.Innovation:
    return processes.Innovation(**(d or {}))


def _model(sec: dict) -> processes.LinearProcessModel:
    m = sec["model"]
    inn = _innovation(sec.get("innovation"))
    if m["kind"] == "ar1":
        if "phi" not in m:
            raise InputError("ar1 model needs phi")
        return processes.ar1_model(m["phi"], inn)
    if "coeffs" not in m:
        raise InputError("ma model needs coeffs")
    return processes.ma_model(m["coeffs"], inn)


def cmd_clt(cfg: dict, out: RunWriter) -> bool:
    sec = cfg["clt"]
    model = _model(sec)
    bhat = tuple(sec.get("bhat", (1.0,)))
    conf = processes.ClTConfig(model, sec["functional"], sec["T"], sec["replicas"], cfg["seed"],
                               sec.get("l", 2), bhat, cfg.get("threads", 1))
    target, finite = processes.clt_targets(conf)
    values = processes.clt_replica_values(conf)
    stats = processes.summarize(values, target, finite)
    tol = sec.get("threshold")
    if target == 0:
        ok = stats["variance"] == 0
    else:
        ok = tol is None or abs(stats["ratio"] - 1) <= tol
    stats["pass"] = ok
    stats["threshold"] = tol
    out.add("replicas.csv", csv_table(["replica", "value"], enumerate(values)))
    out.add("summary.json", dumps(stats))
    keys = sorted(k for k, v in stats.items() if isinstance(v, (int, float)) and not isinstance(v, bool))
    out.add("summary.csv", csv_table(["statistic", "value"], [(k, float(stats[k])) for k in keys]))
    return ok


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def cmd_fit(cfg: dict, out: RunWriter) -> bool:
    sec = cfg["fit"]
    w = estimation.power_weight(sec["weight"]["a"], sec["weight"]["b"])
    bounds = dict(zip(("alpha", "gamma", "c"), estimation.DEFAULT_FRBM_BOX))
    bounds.update({k: tuple(v) for k, v in sec.get("bounds", {}).items()})
    unknown = set(bounds) - {"alpha", "gamma", "c"}
    if unknown:
        raise InputError(f"unknown bound names {sorted(unknown)}")
    box = tuple(bounds[k] for k in ("alpha", "gamma", "c"))
    family = estimation.frbm_family(box)
    truth = None
    if "periodogram" in sec:
        pg = estimation.PeriodogramData.from_csv(_read_text(sec["periodogram"]))
    else:
        if "series" in sec:
            series = processes.SampleSeries.from_csv(_read_text(sec["series"]))
        else:
            syn = sec["synthetic"]
            truth = processes.ThetaFRBM(syn["alpha"], syn["gamma"], syn.get("c", 1.0))
            gen = processes.replica_generators(cfg["seed"], 1)[0]
            s = processes.synthesize_frbm(truth, syn["n"], syn["step"], _innovation(syn.get("innovation")))
            series = s.sample(gen)
            out.add("series.csv", series.to_csv())
        pg = estimation.PeriodogramData.from_series(series)
    out.add("periodogram.csv", pg.to_csv())
    T = 2 * np.pi / pg.dlam
    ratio = sec.get("d4_ratio", 0.0)
    if sec["contrast"] == "whittle":
        res = estimation.fit_whittle(pg, family, w, starts=sec.get("starts", 5))
        cov = estimation.whittle_asymptotic_cov(family, w, res.theta, 1.0, ratio)
    else:
        fam = estimation.frbm_factorized(w, box[:2])
        res = estimation.fit_ibragimov(pg, fam, starts=sec.get("starts", 5))
        cov = estimation.ibragimov_asymptotic_cov(fam, res.theta, 1.0, ratio)
    res.covariance = cov.sigma
    res.metadata.update({"T": T, "truth": None if truth is None else truth.as_array().tolist(),
                         "covariance_flags": cov.flags,
                         "covariance_scale": "asymptotic: Cov(theta_hat) is approximately covariance / T"})
    if sec.get("conditions", True):
        # checked at the estimate and at the box corners
        if sec["contrast"] == "whittle":
            th, fam = res.theta, None
        else:
            th = np.append(res.theta, 1.0)
        corners = [tuple(lo for lo, _ in box), tuple(hi for _, hi in box)]
        res.conditions = estimation.check_conditions(
            family, w, th, corners, pq=(2, math.inf),
            weight_params=(sec["weight"]["a"], sec["weight"]["b"], box[1][1] - box[1][0]),
            fam=fam)
    out.add("result.json", dumps(res.to_dict()))
    if cov.sigma is not None:
        names = list(res.names)
        out.add("covariance.csv", csv_table(["parameter"] + names,
                                            [[n] + list(map(float, row)) for n, row in zip(names, cov.sigma)]))
    return bool(res.converged)


def _table_rows(sec: dict) -> tuple[int, ...]:
    if "rows" in sec:
        return tuple(sec["rows"])
    r, c = sec.get("table", "2x2").split("x")
    return (int(c),) * int(r)


def cmd_diagrams(cfg: dict, out: RunWriter) -> bool:
    sec = cfg["diagrams"]
    table = wick.DiagramTable(_table_rows(sec))
    mode = sec.get("mode", "wick-cumulant")
    diags = wick.enumerate_diagrams(table, gaussian=sec.get("gaussian", True), **wick.MODES[mode])
    report = {"rows": list(table.row_sizes), "mode": mode, "gaussian": sec.get("gaussian", True),
              "count": len(diags)}
    if sec.get("dump", True):
        report["diagrams"] = [d.to_dict()["blocks"] for d in diags]
    out.add("diagrams.json", dumps(report))
    out.add("counts.csv", csv_table(["rows", "mode", "gaussian", "count"],
                                    [("x".join(map(str, table.row_sizes)), mode, report["gaussian"], len(diags))]))
    return True


def _norm_reference(T: int, p: float, domain: str) -> float:
    """Leading-order growth of the p-th power of the Dirichlet kernel norm."""
    if domain == "torus" and p == 1:
        return 4 / math.pi ** 2 * math.log(T)
    scale = 1 / math.pi if domain == "torus" else 2.0
    return scale * T ** (p - 1) * kernels.sinc_power_integral(p)


def cmd_kernels(cfg: dict, out: RunWriter) -> bool:
    sec = cfg["kernels"]
    dom = sec.get("domain", "torus")
    rows = []
    for p in sec["p"]:
        for T in sec["T"]:
            val = kernels.kernel_norm(T, p, dom) ** p
            ref = _norm_reference(T, p, dom)
            rows.append((T, p, dom, val, ref, val / ref if ref > 0 else math.inf))
    out.add("norms.csv", csv_table(["T", "p", "domain", "value", "reference", "ratio"], rows))
    prop = kernels.verify_kernel_property(lambda u: np.cos(u[..., 0]), sec.get("property_T", [64, 256]), 2, dom)
    out.add("property.csv", prop.to_csv())
    out.add("property.json", dumps({"target": prop.target, "decreasing": prop.decreasing,
                                    "converged": prop.converged}))
    return True


COMMANDS: dict[str, Callable[[dict, RunWriter], bool]] = {
    "szego": cmd_szego,
    "polytope": cmd_polytope,
    "clt": cmd_clt,
    "fit": cmd_fit,
    "diagrams": cmd_diagrams,
    "kernels": cmd_kernels,
}

HELP = {
    "szego": "trace limit along a T ladder for a graph and symbols",
    "polytope": "power-counting polytope membership, vertices and family exponents",
    "clt": "Monte Carlo CLT for quadratic forms or Appell sums",
    "fit": "Whittle or Ibragimov estimation for FRBM data",
    "diagrams": "enumerate diagrams of a slot table",
    "kernels": "Dirichlet kernel norms and the Fejér kernel property",
}


# ------------------------------------------------------------ entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML configuration file")
    common.add_argument("--seed", type=int, metavar="N", help="master seed for stochastic commands")
    common.add_argument("--out", metavar="DIR", default="out", help="output root (default: out)")
    common.add_argument("--threads", type=int, metavar="N", help="worker threads")
    parser = argparse.ArgumentParser(prog="fejerlab", description="Fejér-integral limit theorems toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name], description=HELP[name])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = load_config(args.command, args.config, args.seed, args.threads)
        writer = RunWriter()
        ok = COMMANDS[args.command](cfg, writer)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    status = "pass" if ok else "threshold-miss"
    run_dir = writer.write(Path(args.out), args.command, cfg, time.perf_counter() - start, status)
    print(run_dir)
    return EXIT_OK if ok else EXIT_THRESHOLD


if __name__ == "__main__":
    sys.exit(main())
