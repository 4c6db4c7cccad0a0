"""Command-line front end: ``qswlab {spectral,flow,sample,variance,bounds,paths}``.

Every subcommand reads flags, optionally merged over a JSON config file
(flags win), and writes CSV or JSON to ``--out`` or stdout.  CSV output
starts with a ``# schema=qswlab.v1`` comment line followed by a header.

Exit codes: 0 on success, 2 on a configuration error, 1 on a runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bounds_mod
from .combinatorics import count_paths
from .model import Model, QswlabError, parse_eta0
from .samplers import SAMPLERS, run_replicates
from .semigroup import absorption_law, evolve
from .spectral import eigensystem, quasi_stationary, tilde_spectrum
from .variance import (
    empirical_variance,
    v_dp, v_hard, v_is, v_soft,
    w_dp, w_hard, w_is, w_soft,
)

SCHEMA = "qswlab.v1"
DEFAULT_SEED = 20240611
COMMANDS = ("spectral", "flow", "sample", "variance", "bounds", "paths")
PATH_F_CHOICES = ("none", "average")


class ConfigError(Exception):
    """Invalid flags or config file; reported with exit code 2."""


@dataclass
class ExperimentConfig:
    command: str
    d: int
    theta: float = 0.0
    n: list = field(default_factory=lambda: [10])
    N: int = 1000
    replicates: int = 100
    seed: int = DEFAULT_SEED
    eta0: str = "uniform"
    f: str = "phi0"
    format: str = "csv"
    out: str | None = None
    jobs: int = 1
    sampler: str = "soft"
    check: str = "all"
    path_f: str = "none"
    timing: bool = False
    full: bool = False

    @property
    def horizon(self) -> int:
        if len(self.n) != 1:
            raise ConfigError(f"{self.command} takes a single --n, got {self.n}")
        return self.n[0]


# --- parsing ---------------------------------------------------------------------

def _parse_n(value) -> list:
    if isinstance(value, int):
        items = [value]
    elif isinstance(value, list):
        items = value
    else:
        items = [s for s in str(value).split(",") if s.strip()]
    try:
        out = [int(v) for v in items]
    except (TypeError, ValueError):
        raise ConfigError(f"--n must be an integer or comma-separated list, got {value!r}") from None
    if not out or any(v < 0 for v in out):
        raise ConfigError("--n values must be >= 0")
    return out


def _load_vector(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise ConfigError(f"file not found: {path}")
    try:
        with open(path) as fh:
            text = fh.read().replace(",", " ")
        return np.array([float(t) for t in text.split()])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_config(path: str) -> dict:
    """Read a JSON config; parse errors are reported with line and column."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1:1: config must be a JSON object")
    return data


def _fields() -> set:
    return set(ExperimentConfig.__dataclass_fields__) - {"command"}


def build_config(command: str, flags: dict, env=None) -> ExperimentConfig:
    env = os.environ if env is None else env
    values = {}
    if flags.get("config"):
        data = load_config(flags["config"])
        unknown = set(data) - _fields() - {"command"}
        if unknown:
            raise ConfigError(f"{flags['config']}: unknown keys {sorted(unknown)}")
        values.update({k: v for k, v in data.items() if k != "command"})
    values.update({k: v for k, v in flags.items() if k != "config" and v is not None})

    if "seed" not in values and env.get("QSWLAB_SEED"):
        values["seed"] = env["QSWLAB_SEED"]
    if "jobs" not in values and env.get("QSWLAB_JOBS"):
        values["jobs"] = env["QSWLAB_JOBS"]
    if "format" not in values and command in ("bounds", "spectral"):
        values["format"] = "json"
    if "d" not in values:
        raise ConfigError("missing required --d")

    try:
        cfg = ExperimentConfig(
            command=command,
            d=int(values.pop("d")),
            n=_parse_n(values.pop("n", 10)),
            **{k: v for k, v in values.items()},
        )
        cfg.theta = float(cfg.theta)
        cfg.N, cfg.replicates, cfg.seed, cfg.jobs = int(cfg.N), int(cfg.replicates), int(cfg.seed), int(cfg.jobs)
        cfg.timing, cfg.full = bool(cfg.timing), bool(cfg.full)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.d < 1:
        raise ConfigError("--d must be >= 1")
    if not math.isfinite(cfg.theta) or cfg.theta < 0:
        raise ConfigError("--theta must be >= 0")
    if cfg.N < 1 or cfg.replicates < 1 or cfg.jobs < 1:
        raise ConfigError("--N, --replicates and --jobs must be >= 1")
    if cfg.seed < 0:
        raise ConfigError("--seed must be >= 0")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"--format must be csv or json, got {cfg.format!r}")
    if cfg.sampler not in SAMPLERS:
        raise ConfigError(f"--sampler must be one of {SAMPLERS}")
    if cfg.check != "all" and cfg.check not in bounds_mod.CHECKS:
        raise ConfigError(f"--check must be 'all' or one of {bounds_mod.CHECKS}")
    if cfg.path_f not in PATH_F_CHOICES:
        raise ConfigError(f"--path-f must be one of {PATH_F_CHOICES}")
    return cfg


def make_model(cfg: ExperimentConfig) -> Model:
    spec = cfg.eta0
    if isinstance(spec, str) and spec.startswith("file:"):
        spec = _load_vector(spec[5:])
    try:
        return Model(cfg.d, cfg.theta, parse_eta0(spec, cfg.d))
    except ValueError as exc:
        raise ConfigError(f"--eta0: {exc}") from None


def make_f(cfg: ExperimentConfig, model: Model) -> np.ndarray:
    spec = cfg.f
    d = model.d
    if spec == "phi0":
        return np.array(eigensystem(model).phi0)
    if spec == "one":
        return np.ones(d)
    if isinstance(spec, str) and spec.startswith("indicator:"):
        try:
            x = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad --f {spec!r}") from None
        if not 1 <= x <= d:
            raise ConfigError(f"--f indicator state {x} outside 1..{d}")
        e = np.zeros(d)
        e[x - 1] = 1.0
        return e
    if isinstance(spec, str) and spec.startswith("file:"):
        v = _load_vector(spec[5:])
    elif isinstance(spec, list):
        v = np.asarray(spec, dtype=float)
    else:
        raise ConfigError(f"unknown --f {spec!r}; use phi0, one, indicator:x or file:path")
    if v.shape != (d,):
        raise ConfigError(f"--f must have length d = {d}")
    return v


# --- output ----------------------------------------------------------------------------

def _num(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    return x


def render_csv(columns: list, rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def render_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_table(cfg: ExperimentConfig, columns: list, rows: list, params: dict) -> str:
    if cfg.format == "csv":
        return render_csv(columns, rows)
    return render_json({"schema": SCHEMA, "command": cfg.command, "params": params,
                        "columns": columns, "rows": [dict(zip(columns, r)) for r in rows]})


def _params(cfg: ExperimentConfig, *keys) -> dict:
    base = {"d": cfg.d, "theta": cfg.theta, "eta0": cfg.eta0}
    base.update({k: getattr(cfg, k) for k in keys})
    if "n" in base and len(base["n"]) == 1:
        base["n"] = base["n"][0]
    return base


# --- subcommands ---------------------------------------------------------------------------

def cmd_spectral(cfg: ExperimentConfig) -> str:
    model = make_model(cfg)
    basis = eigensystem(model)
    pi, pi_phi = quasi_stationary(model)
    tilde = tilde_spectrum(model)
    data = {
        "d": model.d,
        "theta": model.theta,
        "E": list(basis.E),
        "E0": basis.E0,
        "phi": [list(r) for r in basis.phi],
        "pi": list(pi.weights),
        "pi_phi": list(pi_phi.weights),
        "E1bar": basis.E1bar,
        "Estar": basis.Estar,
        "E0tilde": tilde.E0tilde,
        "s": {str(k): v for k, v in basis.s.items()},
    }
    if cfg.format == "json":
        return render_json({"schema": SCHEMA, **data})
    rows = [("E", i, "", v) for i, v in enumerate(basis.E)]
    rows += [("phi", i, x + 1, v) for i, r in enumerate(basis.phi) for x, v in enumerate(r)]
    rows += [("pi", "", x + 1, v) for x, v in enumerate(pi.weights)]
    rows += [("pi_phi", "", x + 1, v) for x, v in enumerate(pi_phi.weights)]
    rows += [("E1bar", "", "", basis.E1bar), ("Estar", "", "", basis.Estar),
             ("E0tilde", "", "", tilde.E0tilde)]
    rows += [(f"s{k}", "", "", v) for k, v in basis.s.items()]
    return render_csv(["quantity", "i", "x", "value"], rows)


def cmd_flow(cfg: ExperimentConfig) -> str:
    model = make_model(cfg)
    n = cfg.horizon
    tr = evolve(model, n)
    law = absorption_law(model, n)
    d = model.d
    cols = (["n"] + [f"eta_{x}" for x in range(1, d + 1)]
            + [f"eta_hat_{x}" for x in range(1, d + 1)] + ["eta_hat_c", "Z", "P_TX", "P_TY"])
    z = tr.z
    rows = [[p, *tr.etas[p], *tr.eta_hats[p], z[p], law.hard[p], law.soft[p]] for p in range(n + 1)]
    return render_table(cfg, cols, rows, _params(cfg, "n"))


def _path_average(f: np.ndarray):
    fe = np.concatenate([[0.0], f])

    def fn(paths):
        return fe[paths].mean(axis=1)

    return fn


def cmd_sample(cfg: ExperimentConfig) -> str:
    model = make_model(cfg)
    f = make_f(cfg, model)
    f_path = _path_average(f) if cfg.path_f == "average" else None
    table = run_replicates(model, cfg.sampler, cfg.horizon, cfg.N, cfg.replicates, cfg.seed, f,
                           f_path=f_path, jobs=cfg.jobs, timing=cfg.timing)
    cols = ["replicate", "z_estimate", "eta_f"]
    data = [table.replicate, table.z, table.eta_f]
    if f_path is not None:
        cols.append("path_f")
        data.append(table.path_f)
    if cfg.timing:
        cols.append("wall_time")
        data.append(table.wall_time)
    rows = [list(r) for r in zip(*data)]
    return render_table(cfg, cols, rows, _params(cfg, "sampler", "n", "N", "replicates", "seed", "f"))


_CLOSED = {
    "dp": (v_dp, w_dp),
    "is": (v_is, w_is),
    "soft": (v_soft, w_soft),
    "hard": (v_hard, w_hard),
}


def variance_rows(model: Model, sampler: str, n: int, f: np.ndarray, N: int, R: int, seed: int,
                  jobs: int = 1) -> list:
    """[(sampler, quantity, n, closed_form, empirical, se, z_score)] for v and w."""
    if sampler == "hard" and n < 1:
        raise ValueError("the hard sampler needs n >= 1")
    vf, wf = _CLOSED[sampler]
    closed = {"v": vf(model, n, f), "w": wf(model, n, f)}
    emp = {"v": (math.nan, math.nan), "w": (math.nan, math.nan)}
    if R >= 2:
        tr = evolve(model, n)
        eta_f = float(tr.etas[n] @ f)
        table = run_replicates(model, sampler, n, N, R, seed, f, jobs=jobs)
        if sampler == "hard":
            ev = empirical_variance(table, tr.z[n], eta_f, z_scale=tr.z[n - 1],
                                    eta_scale=tr.g_masses[n - 1])
        else:
            ev = empirical_variance(table, tr.z[n], eta_f)
        emp = {"v": (ev.v, ev.v_se), "w": (ev.w, ev.w_se)}
    rows = []
    for q in ("v", "w"):
        e, se = emp[q]
        diff = e - closed[q]
        if math.isnan(e):
            zs = math.nan
        elif abs(diff) <= 1e-12:
            zs = 0.0
        else:
            zs = diff / se if se > 0 else math.copysign(math.inf, diff)
        rows.append([sampler, q, n, closed[q], e, se, zs])
    return rows


def cmd_variance(cfg: ExperimentConfig) -> str:
    model = make_model(cfg)
    f = make_f(cfg, model)
    rows = []
    for n in cfg.n:
        rows += variance_rows(model, cfg.sampler, n, f, cfg.N, cfg.replicates, cfg.seed, cfg.jobs)
    cols = ["sampler", "quantity", "n", "closed_form", "empirical", "se", "z_score"]
    return render_table(cfg, cols, rows, _params(cfg, "sampler", "N", "replicates", "seed", "f"))


def cmd_bounds(cfg: ExperimentConfig) -> str:
    model = make_model(cfg)
    reports = []
    for n in cfg.n:
        reports += bounds_mod.run_checks(model, cfg.check, n)
    if cfg.format == "json":
        return render_json([r.to_dict() for r in reports])
    cols = ["check_id", "params", "lhs", "rhs", "margin", "verdict", "note"]
    rows = []
    for r in reports:
        dct = r.to_dict()
        rows.append([dct["check_id"], json.dumps(dct["params"], sort_keys=True),
                     r.lhs, r.rhs, r.margin, r.verdict, r.note])
    return render_csv(cols, rows)


def cmd_paths(cfg: ExperimentConfig) -> str:
    nmax = cfg.horizon
    table = count_paths(cfg.d, nmax)
    d = cfg.d
    if cfg.full:
        cols = ["n", "x"] + [f"C_y{y}" for y in range(1, d + 1)]
        rows = [[n, x + 1, *[str(c) for c in table.counts[n][x]]] for n in range(nmax + 1) for x in range(d)]
    else:
        cols = ["n"] + [f"C_{x}" for x in range(1, d + 1)]
        rows = [[n, *[str(c) for c in table.row_sums(n)]] for n in range(nmax + 1)]
    if cfg.format == "json":
        return render_json({"schema": SCHEMA, "command": "paths", "params": {"d": d, "n": nmax},
                            "columns": cols, "rows": [dict(zip(cols, r)) for r in rows]})
    return render_csv(cols, rows)


HANDLERS = {
    "spectral": cmd_spectral,
    "flow": cmd_flow,
    "sample": cmd_sample,
    "variance": cmd_variance,
    "bounds": cmd_bounds,
    "paths": cmd_paths,
}


# --- entry point ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qswlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--config", default=S, help="JSON file of defaults; flags override it")
    common.add_argument("--d", type=int, default=S, help="number of interior states")
    common.add_argument("--theta", type=float, default=S, help="laziness parameter (default 0)")
    common.add_argument("--n", default=S, help="horizon, or comma-separated horizons for variance/bounds")
    common.add_argument("--N", type=int, default=S, help="particles or draws per replicate (default 1000)")
    common.add_argument("--replicates", type=int, default=S, help="independent replicates (default 100)")
    common.add_argument("--seed", type=int, default=S, help=f"root seed (default $QSWLAB_SEED or {DEFAULT_SEED})")
    common.add_argument("--eta0", default=S, help="uniform | pi | delta:x | file:path")
    common.add_argument("--f", default=S, help="phi0 | one | indicator:x | file:path")
    common.add_argument("--format", choices=("csv", "json"), default=S)
    common.add_argument("--out", default=S, help="output file (default stdout)")
    common.add_argument("--jobs", type=int, default=S, help="replicate worker threads (default $QSWLAB_JOBS or 1)")
    common.add_argument("--sampler", choices=SAMPLERS, default=S)
    common.add_argument("--check", default=S, help="all | " + " | ".join(bounds_mod.CHECKS))
    common.add_argument("--path-f", dest="path_f", choices=PATH_F_CHOICES, default=S,
                        help="add a path_f column: time average of f along the ancestral line")
    common.add_argument("--timing", action="store_true", default=S, help="add a wall_time column")
    common.add_argument("--full", action="store_true", default=S, help="paths: full C_n(x, y) table")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__doc__ or name)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    try:
        cfg = build_config(command, args)
        text = HANDLERS[command](cfg)
    except ConfigError as exc:
        print(f"qswlab {command}: config error: {exc}", file=sys.stderr)
        return 2
    except (QswlabError, ValueError, ArithmeticError) as exc:
        print(f"qswlab {command}: error: {exc}", file=sys.stderr)
        return 1
    try:
        if cfg.out:
            with open(cfg.out, "w", newline="\n", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"qswlab {command}: cannot write output: {exc}", file=sys.stderr)
        return 1
    return 0
