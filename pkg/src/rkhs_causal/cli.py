"""Command line interface.

Exit codes: 0 success, 2 configuration or schema error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import simulate as sim
from .causal import ConditionalResponse, Design, DoseResponse, TreatedResponse, resolve_kernel
from .data import Dataset
from .distributions import CounterfactualDistribution, default_candidate_grid, herd
from .exceptions import (
    ConfigurationError,
    NumericalError,
    RKHSCausalError,
    SchemaError,
)
from .graphical import FrontDoorResponse
from .kernels import KernelConfig
from .ridge import TheoreticalRate, check_grid, default_grid, tune_lambda

logger = logging.getLogger("rkhs_causal")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

GRID_VARIABLES = {
    "ate": ("d",),
    "ds": ("d",),
    "inc_ate": ("d",),
    "frontdoor": ("d",),
    "att": ("d", "d_prime"),
    "inc_att": ("d", "d_prime"),
    "cate": ("d", "v"),
}


class CSVParseError(SchemaError):
    pass


# parsing ---------------------------------------------------------------------

def read_table(path) -> dict[str, np.ndarray]:
    """Read a numeric CSV with a header row into named float columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CSVParseError(f"{path}: empty file") from None
        if len(set(header)) != len(header):
            raise CSVParseError(f"{path}: duplicate column names in header")
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CSVParseError(
                    f"{path}, line {reader.line_num}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise CSVParseError(f"{path}, line {reader.line_num}: {exc}") from None
    if not rows:
        raise CSVParseError(f"{path}: no data rows")
    table = np.asarray(rows, dtype=float)
    return {name: table[:, j] for j, name in enumerate(header)}


def _role_block(table: dict, role: str, required: bool) -> np.ndarray | None:
    if role in table:
        return table[role][:, None]
    numbered = []
    j = 1
    while f"{role}{j}" in table:
        numbered.append(table[f"{role}{j}"])
        j += 1
    if numbered:
        return np.column_stack(numbered)
    if required:
        raise SchemaError(f"missing column {role!r} (or {role}1..{role}p)")
    return None


def load_dataset(path, need_v: bool = False) -> Dataset:
    table = read_table(path)
    y = _role_block(table, "y", True)
    return Dataset(y=y[:, 0], d=_role_block(table, "d", True), x=_role_block(table, "x", True),
                   v=_role_block(table, "v", need_v))


def load_covariates(path) -> np.ndarray:
    return _role_block(read_table(path), "x", True)


def parse_penalty(text: str):
    text = text.strip().lower()
    if text in ("loocv", "gcv"):
        return text
    if text.startswith("theoretical"):
        _, _, args = text.partition(":")
        parts = [p for p in args.split(",") if p]
        b = float(parts[0]) if parts else math.inf
        c = float(parts[1]) if len(parts) > 1 else 2.0
        return TheoreticalRate(b, c)
    value = text.removeprefix("fixed:")
    try:
        lam = float(value)
    except ValueError:
        raise ConfigurationError(f"unrecognised penalty policy {text!r}") from None
    if not (lam > 0 and math.isfinite(lam)):
        raise ConfigurationError(f"fixed penalty must be positive, got {lam}")
    return lam


def parse_range(text: str) -> np.ndarray:
    """``min:max:count`` to an equally spaced array."""
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise ConfigurationError(f"grid spec must be min:max:count, got {text!r}") from None
    if count < 1:
        raise ConfigurationError("grid count must be at least 1")
    return np.linspace(lo, hi, count)


def parse_log_range(text: str) -> np.ndarray:
    try:
        lo, hi, count = text.split(":")
        return check_grid(np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(count)))
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"penalty grid must be min:max:count, got {text!r}") from None


def parse_assignments(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"expected NAME=VALUE, got {item!r}")
        out[name.strip()] = value.strip()
    return out


def parse_kernel(policy: str):
    """Kernel policy: 'median', 'joint-median', 'exact' or 'ls:a,b,...'.

    Returns (KernelConfig or None, heuristic name).
    """
    policy = policy.lower()
    if policy == "median":
        return None, "median"
    if policy in ("joint-median", "joint_median"):
        return None, "joint_median"
    if policy in ("exact", "exact-match", "binary"):
        return KernelConfig.exact_match(), None
    if policy.startswith("ls:"):
        try:
            return KernelConfig.exp_quadratic([float(v) for v in policy[3:].split(",")]), None
        except ValueError:
            raise ConfigurationError(f"bad lengthscales in {policy!r}") from None
    raise ConfigurationError(f"unknown kernel policy {policy!r}")


def resolve_kernels(items, blocks, data_blocks) -> dict:
    """Per-block KernelConfig. Heuristic policies are resolved eagerly so the
    sidecar records concrete lengthscales."""
    policies = parse_assignments(items)
    unknown = set(policies) - set(blocks)
    if unknown:
        raise ConfigurationError(f"kernel given for unused block(s) {sorted(unknown)}")
    out = {}
    for block in blocks:
        config, heuristic = parse_kernel(policies.get(block, "median"))
        out[block] = config if config is not None else resolve_kernel(None, data_blocks[block], heuristic)
    return out


# output ----------------------------------------------------------------------

def _fmt(value) -> str:
    return format(float(value), ".17g")


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def sidecar_path(out) -> Path:
    return Path(out).with_suffix(".json")


# subcommands -----------------------------------------------------------------

def _grid_for(args, estimand, data: Dataset) -> dict[str, np.ndarray]:
    specs = parse_assignments(args.grid)
    names = GRID_VARIABLES[estimand]
    unknown = set(specs) - set(names)
    if unknown:
        raise ConfigurationError(f"grid given for unused variable(s) {sorted(unknown)}")
    grids = {}
    for name in names:
        if name in specs:
            grids[name] = parse_range(specs[name])
            continue
        source = data.v if name == "v" else data.d
        if source.shape[1] != 1:
            raise ConfigurationError(f"--grid {name}=min:max:count is required for vector {name}")
        grids[name] = np.linspace(source.min(), source.max(), 50)
    return grids


def _pairs(grids, names):
    if len(names) == 1:
        g = grids[names[0]]
        return g, None, g[:, None]
    pairs = np.array(list(itertools.product(grids[names[0]], grids[names[1]])))
    return pairs[:, 0], pairs[:, 1], pairs


def cmd_estimate(args) -> int:
    estimand = args.estimand
    data = load_dataset(args.input, need_v=estimand == "cate")
    if estimand == "ds" and not args.alt_covariates:
        raise SchemaError("estimand 'ds' requires --alt-covariates")
    if estimand != "ds" and args.alt_covariates:
        raise ConfigurationError("--alt-covariates is only used by estimand 'ds'")
    blocks = ("d", "v", "x") if estimand == "cate" else ("d", "x")
    kernels = resolve_kernels(args.kernel, blocks, {"d": data.d, "x": data.x, "v": data.v})
    penalty = parse_penalty(args.penalty)
    inner_penalty = parse_penalty(args.embedding_penalty)
    pgrid = parse_log_range(args.penalty_grid) if args.penalty_grid else None
    names = GRID_VARIABLES[estimand]
    grids = _grid_for(args, estimand, data)
    first, second, grid = _pairs(grids, names)
    common = dict(kernel_d=kernels["d"], kernel_x=kernels["x"], penalty_grid=pgrid)

    if estimand in ("ate", "ds", "inc_ate"):
        est = DoseResponse(penalty, **common).fit(data.y, data.d, data.x)
        if estimand == "ate":
            values = est.predict(first)
        elif estimand == "inc_ate":
            values = est.predict_gradient(first)
        else:
            values = est.predict_shifted(first, load_covariates(args.alt_covariates))
    elif estimand in ("att", "inc_att"):
        est = TreatedResponse(penalty, inner_penalty, **common).fit(data.y, data.d, data.x)
        values = est.predict(first, second) if estimand == "att" else est.predict_gradient(first, second)
    elif estimand == "cate":
        est = ConditionalResponse(penalty, inner_penalty, kernel_v=kernels["v"], **common)
        values = est.fit(data.y, data.d, data.v, data.x).predict(first, second)
    else:
        est = FrontDoorResponse(penalty, inner_penalty, **common).fit(data.y, data.d, data.x)
        values = est.predict(first)

    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericalError("estimate contains non-finite values")
    write_csv(args.out, list(names) + ["estimate"], [list(g) + [v] for g, v in zip(grid, values)])
    write_json(sidecar_path(args.out), {
        "command": "estimate",
        "estimand": estimand,
        "input": str(args.input),
        "alt_covariates": str(args.alt_covariates) if args.alt_covariates else None,
        "n": data.n,
        "penalties": est.penalties(),
        "penalty_policy": {"outcome": args.penalty, "embedding": args.embedding_penalty},
        "kernels": est.design_.kernels(),
        "grid": {name: grids[name].tolist() for name in names},
        "seed": args.seed,
    })
    return EXIT_OK


def cmd_simulate(args) -> int:
    generate = {"dose": sim.gen_dose_design, "hte": sim.gen_hte_design}[args.design]
    data = generate(args.n, args.seed)
    cols = data.columns()
    write_csv(args.out, list(cols), np.column_stack(list(cols.values())))
    write_json(sidecar_path(args.out), {"command": "simulate", "design": args.design,
                                        "n": args.n, "seed": args.seed})
    return EXIT_OK


def cmd_study(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    if not sizes or min(sizes) < 1:
        raise ConfigurationError("--sizes must list positive sample sizes")
    heuristic = args.heuristic or ("joint_median" if args.design == "dose" else "median")
    settings = sim.EstimatorSettings(
        penalty=parse_penalty(args.penalty),
        embedding_penalty=parse_penalty(args.embedding_penalty),
        heuristic=heuristic.replace("-", "_"),
        penalty_grid=parse_log_range(args.penalty_grid) if args.penalty_grid else None,
    )
    result = sim.run_study(args.design, sizes, args.replications, settings, seed=args.seed)
    rows = [[r["design"], str(r["n"]), str(r["replication"]), r["mse"]] for r in result.records]
    write_csv(args.out, ["design", "n", "replication", "mse"], rows)
    summary = result.summary()
    summary.update({"seed": args.seed, "heuristic": settings.heuristic,
                    "penalty_policy": args.penalty, "replications": args.replications})
    write_json(sidecar_path(args.out), summary)
    return EXIT_OK


def cmd_herd(args) -> int:
    estimand = args.estimand
    data = load_dataset(args.input, need_v=estimand == "cate")
    blocks = ("d", "v", "x", "y") if estimand == "cate" else ("d", "x", "y")
    kernels = resolve_kernels(args.kernel, blocks,
                              {"d": data.d, "x": data.x, "v": data.v, "y": data.y})
    x_alt = None
    if estimand == "ds":
        if not args.alt_covariates:
            raise SchemaError("estimand 'ds' requires --alt-covariates")
        x_alt = load_covariates(args.alt_covariates)
    if estimand == "att" and args.d_prime is None:
        raise ConfigurationError("estimand 'att' requires --d-prime")
    if estimand == "cate" and args.v is None:
        raise ConfigurationError("estimand 'cate' requires --v")
    est = CounterfactualDistribution(
        estimand, parse_penalty(args.penalty), parse_penalty(args.embedding_penalty),
        kernel_d=kernels["d"], kernel_v=kernels.get("v"), kernel_x=kernels["x"],
        kernel_y=kernels["y"],
        penalty_grid=parse_log_range(args.penalty_grid) if args.penalty_grid else None,
    )
    est.fit(data.y, data.d, data.x, data.v if estimand == "cate" else None)
    embedding = est.embed(args.d, args.d_prime, args.v, x_alt)
    if args.candidates:
        candidates = parse_range(args.candidates)
    else:
        candidates = default_candidate_grid(data.y, args.grid_size)
    sample = herd(embedding, args.m, candidates)
    write_csv(args.out, ["j", "y"], [[str(j + 1), y] for j, y in enumerate(sample.points)])
    write_json(sidecar_path(args.out), {
        "command": "herd", "estimand": estimand, "input": str(args.input),
        "eval_point": embedding.eval_point, "m": args.m,
        "candidate_grid": {"min": float(candidates[0]), "max": float(candidates[-1]),
                           "count": int(len(candidates))},
        "penalties": est.penalties(),
        "kernels": dict(est.design_.kernels(), y=est.kernel_y_.to_dict()),
    })
    return EXIT_OK


def cmd_tune(args) -> int:
    data = load_dataset(args.input, need_v=args.with_v)
    blocks = ("d", "v", "x") if args.with_v else ("d", "x")
    kernels = resolve_kernels(args.kernel, blocks, {"d": data.d, "x": data.x, "v": data.v})
    design = Design(data, kernels["d"], kernels["x"], kernels.get("v"), use_v=args.with_v)
    grid = parse_log_range(args.penalty_grid) if args.penalty_grid else default_grid()
    best, losses = tune_lambda(design.outcome_gram(), data.y, grid, args.criterion)
    write_csv(args.out, ["lambda", "loss"], zip(grid, losses))
    write_json(sidecar_path(args.out), {"command": "tune", "criterion": args.criterion,
                                        "best_lambda": best, "kernels": design.kernels(),
                                        "n": data.n})
    return EXIT_OK


# entry point -----------------------------------------------------------------

def _add_common(p, kernel_help="BLOCK=POLICY with POLICY in median, joint-median, exact, ls:a,b,..."):
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--kernel", action="append", metavar="BLOCK=POLICY", help=kernel_help)
    p.add_argument("--penalty-grid", metavar="MIN:MAX:COUNT",
                   help="log-spaced candidate penalties (default 1e-8:1e2:50)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rkhs-causal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic design")
    p.add_argument("--design", choices=["dose", "hte"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate a causal function on a grid")
    _add_common(p)
    p.add_argument("--estimand", choices=list(GRID_VARIABLES), required=True)
    p.add_argument("--grid", action="append", metavar="VAR=MIN:MAX:COUNT")
    p.add_argument("--penalty", default="loocv",
                   help="loocv, gcv, fixed:LAM (or LAM), theoretical:B,C")
    p.add_argument("--embedding-penalty", default="loocv")
    p.add_argument("--alt-covariates", type=Path)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("herd", help="herded samples from a counterfactual distribution")
    _add_common(p)
    p.add_argument("--estimand", choices=["ate", "ds", "att", "cate", "frontdoor"], default="ate")
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--d-prime", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--grid-size", type=int, default=512)
    p.add_argument("--candidates", metavar="MIN:MAX:COUNT")
    p.add_argument("--penalty", default="loocv")
    p.add_argument("--embedding-penalty", default="loocv")
    p.add_argument("--alt-covariates", type=Path)
    p.set_defaults(func=cmd_herd)

    p = sub.add_parser("study", help="Monte Carlo MSE study")
    p.add_argument("--design", choices=["dose", "hte"], required=True)
    p.add_argument("--sizes", default="100,1000")
    p.add_argument("--replications", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--penalty", default="loocv")
    p.add_argument("--embedding-penalty", default="loocv")
    p.add_argument("--penalty-grid", metavar="MIN:MAX:COUNT")
    p.add_argument("--heuristic", choices=["median", "joint-median"],
                   help="lengthscale heuristic (default: joint-median for dose, median for hte)")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("tune", help="validation losses of the outcome regression over a penalty grid")
    _add_common(p)
    p.add_argument("--criterion", choices=["loocv", "gcv"], default="loocv")
    p.add_argument("--with-v", action="store_true", help="include the v block in the regression")
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (RKHSCausalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
