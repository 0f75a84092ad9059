"""Command-line interface.

Subcommands: fit, predict, grid, export-graph, embed, synth.  All commands
are deterministic given their flags and seeds (no environment variables,
no network); numeric outputs are written at full double precision so
reruns are byte-identical.  Exit codes: 0 success, 1 input error, 2 fit
finished without converging.
"""

import argparse
import json
import sys
from pathlib import Path

from .baselines import FixedLink
from .data_io import (
    read_matrix_csv,
    read_model,
    read_regression_csv,
    read_timeseries_csv,
    write_graph_csv,
    write_link_json,
    write_matrix_csv,
    write_model,
    write_report_json,
    write_score_table_csv,
)
from .errors import InvalidInputError, SilvarError
from .evaluation import (
    GridSpec,
    SplitSpec,
    SyntheticSpec,
    embed,
    grid_search,
    synthesize,
)
from .link import LinkFunction
from .prox import SPARSE_STRUCTURES, RegularizerConfig
from .solver import SolverConfig, fit, predict
from .timeseries import build_ar_dataset, to_graph

_REG_KEYS = {"lambda_sparse", "lambda_lowrank", "sparse_structure"}
_SOLVER_KEYS = {
    "max_iters",
    "rel_tol",
    "acceleration",
    "step_rule",
    "backtracking_shrink",
    "standardize_inputs",
    "link_update_every",
}
_SPLIT_KEYS = {"train_count", "validation_count", "test_count", "shuffle_seed"}
_GRID_KEYS = {"exponents"}
_PATH_KEYS = {"x", "y", "timeseries", "model_out", "report_out", "table_out"}
_SECTIONS = {
    "regularizer": _REG_KEYS,
    "solver": _SOLVER_KEYS,
    "split": _SPLIT_KEYS,
    "grid": _GRID_KEYS,
    "paths": _PATH_KEYS,
}


def _load_config(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise InvalidInputError(f"config file not found: {p}")
    with open(p) as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise InvalidInputError("config must be a JSON object")
    for section, content in payload.items():
        if section not in _SECTIONS:
            raise InvalidInputError(f"unknown config section {section!r}")
        if not isinstance(content, dict):
            raise InvalidInputError(f"config section {section!r} must be an object")
        unknown = set(content) - _SECTIONS[section]
        if unknown:
            raise InvalidInputError(
                f"unknown keys in config section {section!r}: {sorted(unknown)}"
            )
    return payload


def _pick(*values):
    for v in values:
        if v is not None:
            return v
    return None


def _parse_exponents(text):
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return tuple(range(int(lo), int(hi) + 1))
        return tuple(int(tok) for tok in text.split(","))
    except ValueError:
        raise InvalidInputError(
            f"cannot parse exponents {text!r}; use 'lo..hi' or a comma list"
        ) from None


def _build_reg(args, config, lag_count, default_structure):
    section = config.get("regularizer", {})
    return RegularizerConfig(
        lambda_sparse=float(_pick(args.lambda_sparse, section.get("lambda_sparse"), 0.1)),
        lambda_lowrank=float(_pick(args.lambda_lowrank, section.get("lambda_lowrank"), 0.1)),
        sparse_structure=_pick(
            args.sparse_structure, section.get("sparse_structure"), default_structure
        ),
        lag_count=lag_count,
    )


def _build_solver(args, config):
    section = config.get("solver", {})
    defaults = SolverConfig()
    return SolverConfig(
        max_iters=int(_pick(args.max_iters, section.get("max_iters"), defaults.max_iters)),
        rel_tol=float(_pick(args.rel_tol, section.get("rel_tol"), defaults.rel_tol)),
        acceleration=bool(
            _pick(
                False if args.no_acceleration else None,
                section.get("acceleration"),
                defaults.acceleration,
            )
        ),
        step_rule=_pick(args.step_rule, section.get("step_rule"), defaults.step_rule),
        backtracking_shrink=float(
            _pick(
                args.backtracking_shrink,
                section.get("backtracking_shrink"),
                defaults.backtracking_shrink,
            )
        ),
        standardize_inputs=bool(
            _pick(
                False if args.no_standardize else None,
                section.get("standardize_inputs"),
                defaults.standardize_inputs,
            )
        ),
        link_update_every=int(
            _pick(
                args.link_update_every,
                section.get("link_update_every"),
                defaults.link_update_every,
            )
        ),
    )


def _load_dataset(args, config):
    paths = config.get("paths", {})
    x = _pick(args.x, paths.get("x"))
    y = _pick(args.y, paths.get("y"))
    ts_path = _pick(args.timeseries, paths.get("timeseries"))
    if ts_path is not None:
        if args.lags is None:
            raise InvalidInputError("--timeseries requires --lags")
        series = read_timeseries_csv(ts_path)
        return build_ar_dataset(series, args.lags), args.lags, series
    if x is not None and y is not None:
        count = bool(getattr(args, "count_data", False))
        return read_regression_csv(x, y, count=count), 1, None
    raise InvalidInputError("provide --x and --y, or --timeseries with --lags")


def _fixed_link(name):
    if name == "learned":
        return None
    return FixedLink(name)


def _cmd_fit(args):
    config = _load_config(args.config)
    data, lags, _ = _load_dataset(args, config)
    reg = _build_reg(args, config, lags, "group" if lags > 1 else "l1")
    solver_cfg = _build_solver(args, config)
    model, report = fit(
        data,
        reg,
        solver_cfg,
        fixed_link=_fixed_link(args.link),
        clamp_lowrank=args.no_lowrank,
    )
    out = _pick(args.out, config.get("paths", {}).get("model_out"))
    if out is None:
        raise InvalidInputError("fit needs --out for the model JSON")
    write_model(out, model)
    report_out = _pick(args.report, config.get("paths", {}).get("report_out"))
    if report_out is not None:
        write_report_json(report_out, report)
    return 0 if report.converged else 2


def _cmd_predict(args):
    model = read_model(args.model)
    X = read_matrix_csv(args.x)
    write_matrix_csv(args.out, predict(model, X))
    return 0


def _cmd_grid(args):
    config = _load_config(args.config)
    data, lags, _ = _load_dataset(args, config)
    reg = _build_reg(args, config, lags, "group" if lags > 1 else "l1")
    solver_cfg = _build_solver(args, config)
    split_section = config.get("split", {})
    train = _pick(args.train, split_section.get("train_count"))
    val = _pick(args.val, split_section.get("validation_count"))
    test = _pick(args.test, split_section.get("test_count"))
    if train is None or val is None or test is None:
        raise InvalidInputError("grid needs --train, --val and --test counts")
    shuffle = _pick(args.shuffle_seed, split_section.get("shuffle_seed"))
    split = SplitSpec(int(train), int(val), int(test), shuffle)
    exps = _pick(
        _parse_exponents(args.exponents) if args.exponents else None,
        tuple(config.get("grid", {}).get("exponents", ())) or None,
    )
    grid = GridSpec(exps) if exps is not None else GridSpec()
    result = grid_search(
        data,
        split,
        grid,
        reg,
        solver_cfg,
        workers=args.workers,
        fixed_link=_fixed_link(args.link),
        clamp_lowrank=args.no_lowrank,
    )
    table_out = _pick(args.table, config.get("paths", {}).get("table_out"))
    if table_out is None:
        raise InvalidInputError("grid needs --table for the score CSV")
    write_score_table_csv(table_out, result.table)
    out = _pick(args.out, config.get("paths", {}).get("model_out"))
    if out is not None:
        write_model(out, result.model)
    report_out = _pick(args.report, config.get("paths", {}).get("report_out"))
    if report_out is not None:
        write_report_json(report_out, result.report)
    return 0 if result.report.converged else 2


def _cmd_export_graph(args):
    model = read_model(args.model)
    names = coords = None
    if args.timeseries is not None:
        series = read_timeseries_csv(args.timeseries)
        names, coords = series.series_names, series.coordinates
    export = to_graph(model, args.density, series_names=names, coordinates=coords)
    write_graph_csv(args.out, export)
    return 0


def _cmd_embed(args):
    model = read_model(args.model)
    X = read_matrix_csv(args.x)
    write_matrix_csv(args.out, embed(model, X, args.rank))
    return 0


def _cmd_synth(args):
    spec = SyntheticSpec(
        m=args.m,
        p=args.p,
        n=args.n,
        sparsity=args.sparsity,
        rank=args.rank,
        link_kind=args.link_kind,
        noise_std=args.noise_std,
        seed=args.seed,
    )
    data, A0, L0, link0 = synthesize(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out / "X.csv", data.X)
    write_matrix_csv(out / "Y.csv", data.Y)
    write_matrix_csv(out / "A_true.csv", A0)
    write_matrix_csv(out / "L_true.csv", L0)
    if isinstance(link0, LinkFunction):
        write_link_json(out / "link_true.json", link0)
    else:
        with open(out / "link_true.json", "w") as fh:
            json.dump({"kind": link0.kind, "scale": link0.scale}, fh)
            fh.write("\n")
    return 0


def _add_data_flags(p):
    p.add_argument("--x", help="input matrix CSV (rows = features, columns = samples)")
    p.add_argument("--y", help="response matrix CSV (rows = responses, columns = samples)")
    p.add_argument("--timeseries", help="time-series CSV (header of names, one row per step)")
    p.add_argument("--lags", type=int, help="autoregressive order for --timeseries")
    p.add_argument(
        "--count-data",
        action="store_true",
        help="validate X/Y entries as non-negative integers",
    )


def _add_model_flags(p):
    p.add_argument("--link", choices=("learned", "identity", "softplus"), default="learned",
                   help="learn the link or freeze it")
    p.add_argument("--no-lowrank", action="store_true",
                   help="clamp the low-rank part to zero (sparse SIM)")
    p.add_argument("--lambda-sparse", type=float, default=None,
                   help="sparse penalty weight (default 0.1)")
    p.add_argument("--lambda-lowrank", type=float, default=None,
                   help="low-rank penalty weight (default 0.1)")
    p.add_argument("--sparse-structure", choices=SPARSE_STRUCTURES, default=None,
                   help="elementwise l1 or per-edge lag groups "
                        "(default: group for AR fits, l1 otherwise)")
    p.add_argument("--max-iters", type=int, default=None, help="iteration cap (default 1000)")
    p.add_argument("--rel-tol", type=float, default=None,
                   help="relative objective-change tolerance (default 1e-6)")
    p.add_argument("--no-acceleration", action="store_true", help="disable momentum")
    p.add_argument("--step-rule", choices=("backtracking", "fixed_spectral"), default=None,
                   help="step-size rule (default backtracking)")
    p.add_argument("--backtracking-shrink", type=float, default=None,
                   help="backtracking shrink factor (default 0.5)")
    p.add_argument("--no-standardize", action="store_true",
                   help="skip per-feature input standardization")
    p.add_argument("--link-update-every", type=int, default=None,
                   help="re-estimate the link every k-th iteration (default 1)")
    p.add_argument("--config", help="JSON run-config file; flags override it")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="silvar",
        description="Learn sparse plus low-rank regression models with a "
        "monotone 1-Lipschitz link.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--out", help="output model JSON")
    p.add_argument("--report", help="output fit-report JSON")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="apply a saved model",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--x", required=True, help="input matrix CSV")
    p.add_argument("--out", required=True, help="output prediction CSV")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("grid", help="hyperparameter grid search",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--train", type=int, default=None, help="training sample count")
    p.add_argument("--val", type=int, default=None, help="validation sample count")
    p.add_argument("--test", type=int, default=None, help="test sample count")
    p.add_argument("--shuffle-seed", type=int, default=None,
                   help="shuffle samples with this seed (omit for contiguous splits)")
    p.add_argument("--exponents", default=None,
                   help="grid exponents i for 10^(i/4); 'lo..hi' or comma list "
                        "(default -8..12)")
    p.add_argument("--workers", type=int, default=1, help="parallel fit processes")
    p.add_argument("--table", help="output score-table CSV")
    p.add_argument("--out", help="output model JSON for the selected cell")
    p.add_argument("--report", help="output fit-report JSON for the selected cell")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("export-graph", help="export the sparse part as a weighted edge list",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--density", type=float, required=True,
                   help="target fraction of nonzero entries to keep, in (0, 1]")
    p.add_argument("--timeseries", default=None,
                   help="time-series CSV supplying node names and coordinates")
    p.add_argument("--out", required=True, help="output edge CSV")
    p.set_defaults(func=_cmd_export_graph)

    p = sub.add_parser("embed", help="project inputs onto the top latent directions",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--x", required=True, help="input matrix CSV")
    p.add_argument("--rank", type=int, required=True, help="number of components")
    p.add_argument("--out", required=True, help="output embedding CSV (rank rows)")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("synth", help="generate a seeded synthetic instance",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--m", type=int, required=True, help="response dimension")
    p.add_argument("--p", type=int, required=True, help="input dimension")
    p.add_argument("--n", type=int, required=True, help="sample count")
    p.add_argument("--sparsity", type=float, default=0.1, help="fraction of nonzeros in A")
    p.add_argument("--rank", type=int, default=2, help="rank of L")
    p.add_argument("--link-kind", choices=("identity", "clipped_linear", "scaled_softplus"),
                   default="clipped_linear", help="ground-truth link")
    p.add_argument("--noise-std", type=float, default=0.1, help="observation noise")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--out-dir", required=True,
                   help="directory for X.csv, Y.csv, A_true.csv, L_true.csv, link_true.json")
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SilvarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
