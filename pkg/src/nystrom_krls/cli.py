"""``nystrom`` command-line front end.

    nystrom grid|path|scores|effdim --config CONFIG.json [--threads N] [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 data error, 4 resource cap,
1 any other failure. See ``docs/config.md`` for the config schema.
"""

import argparse
import copy
import json
import logging
import os
import sys
import time

from .data import load_dataset
from .diagnostics import effective_dimension_table
from .errors import ConfigError, InputError, NystromError, ResourceCapError
from .incremental import naive_path, run_path
from .kernels import KernelSpec
from .model_selection import (
    GridSpec,
    Strategy,
    holdout_split,
    lin_grid,
    log_coupling,
    log_grid,
    run_grid,
    run_m_regularized,
    score,
)
from .solvers import predict, save_model
from .subsampling import (
    DEFAULT_MAX_DENSE_N,
    STREAM_LANDMARKS,
    STREAM_SPLIT,
    SamplingPlan,
    leverage_scores_approx,
    leverage_scores_exact,
    make_rng,
    sample_indices,
    write_scores_csv,
)

log = logging.getLogger("nystrom_krls")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DATA, EXIT_CAP = 0, 1, 2, 3, 4

DEFAULTS = {
    "data": {"test": None, "target_column": -1, "delimiter": ",", "header": False, "standardize": True},
    "seed": 0,
    "max_dense_n": DEFAULT_MAX_DENSE_N,
    "strategy": {"kind": "plain", "t": None, "sketch_size": None},
    "grid": {"holdout_fraction": 0.2, "trials": 1, "metric": "rmse", "coupling": None,
             "effdim": False, "timing_comparison": None},
    "path": {"holdout_fraction": 0.2, "metric": "rmse", "check": False},
    "scores": {"sketch_size": None, "validate": False},
}


# fields beyond the defaults that a section may carry
REQUIRED = {"data": {"train"}, "kernel": {"sigma"}, "grid": {"lambdas", "ms"}, "path": {"lambda", "m"},
            "scores": {"t"}, "effdim": {"lambdas"}, "strategy": set()}


def _check_keys(raw):
    unknown = set(raw) - set(DEFAULTS) - set(REQUIRED)
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    for section, value in raw.items():
        if section not in REQUIRED:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"{section} must be a JSON object")
        allowed = set(DEFAULTS.get(section, {})) | REQUIRED[section]
        extra = set(value) - allowed
        if extra:
            raise ConfigError(f"unknown fields in {section}: {', '.join(sorted(extra))}")


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _need(d, key, where):
    if key not in d or d[key] is None:
        raise ConfigError(f"missing required field {where}.{key}")
    return d[key]


def expand_lambdas(spec, where):
    if isinstance(spec, dict) and "logspace" in spec:
        lo, hi, num = spec["logspace"]
        return log_grid(lo, hi, num)
    if isinstance(spec, list) and spec:
        return [float(v) for v in spec]
    raise ConfigError(f"{where} must be a nonempty list or {{\"logspace\": [lo, hi, num]}}")


def expand_ms(spec, where):
    if isinstance(spec, dict) and "linspace" in spec:
        lo, hi, num = spec["linspace"]
        return lin_grid(lo, hi, num)
    if isinstance(spec, list) and spec:
        return [int(v) for v in spec]
    raise ConfigError(f"{where} must be a nonempty list or {{\"linspace\": [lo, hi, num]}}")


def resolve_config(raw, command):
    """Fill defaults, expand grids and validate; the result is written into every output."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(raw)
    cfg = _merge(DEFAULTS, raw)
    _need(cfg["data"], "train", "data")
    sigma = _need(cfg.get("kernel") or {}, "sigma", "kernel")
    try:
        KernelSpec(sigma)
    except InputError as e:
        raise ConfigError(str(e)) from None
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    Strategy(cfg["strategy"]["kind"], cfg["strategy"]["t"], cfg["strategy"]["sketch_size"])
    if command == "grid":
        g = cfg["grid"]
        g["ms"] = expand_ms(_need(g, "ms", "grid"), "grid.ms")
        if g["coupling"] is None:
            g["lambdas"] = expand_lambdas(_need(g, "lambdas", "grid"), "grid.lambdas")
            GridSpec(g["lambdas"], g["ms"], g["holdout_fraction"], g["trials"], cfg["seed"], g["metric"])
        else:
            if not (g["coupling"] == "log" or isinstance(g["coupling"], (int, float))):
                raise ConfigError("grid.coupling must be \"log\" or a constant lambda")
            GridSpec([1.0], g["ms"], g["holdout_fraction"], g["trials"], cfg["seed"], g["metric"])
        tc = g["timing_comparison"]
        if tc is not None:
            for key in ("lambda", "m_max", "levels"):
                _need(tc, key, "grid.timing_comparison")
    elif command == "path":
        p = cfg["path"]
        if float(_need(p, "lambda", "path")) <= 0:
            raise ConfigError("path.lambda must be positive")
        if int(_need(p, "m", "path")) < 1:
            raise ConfigError("path.m must be positive")
    elif command == "scores":
        if float(_need(cfg["scores"], "t", "scores")) <= 0:
            raise ConfigError("scores.t must be positive")
    elif command == "effdim":
        cfg["effdim"] = {"lambdas": expand_lambdas(_need(cfg.get("effdim") or {}, "lambdas", "effdim"),
                                                   "effdim.lambdas")}
    return cfg


def _dataset(cfg):
    d = cfg["data"]
    ds = load_dataset(d["train"], d["test"], d["target_column"], d["delimiter"], d["header"],
                      d["standardize"])
    log.info("loaded %s: n=%d d=%d%s", d["train"], ds.n, ds.d,
             "" if ds.X_test is None else f", test n={ds.X_test.shape[0]}")
    return ds


def _strategy(cfg):
    s = cfg["strategy"]
    return Strategy(s["kind"], s["t"], s["sketch_size"], cfg["max_dense_n"])


def cmd_grid(cfg, out, threads):
    ds = _dataset(cfg)
    kernel = KernelSpec(cfg["kernel"]["sigma"])
    g = cfg["grid"]
    common = dict(strategy=_strategy(cfg), n_jobs=threads, X_test=ds.X_test, y_test=ds.y_test)
    if g["coupling"] is None:
        spec = GridSpec(g["lambdas"], g["ms"], g["holdout_fraction"], g["trials"], cfg["seed"], g["metric"])
        report = run_grid(ds.X, ds.y, kernel, spec, **common)
    else:
        c = g["coupling"]
        coupling = log_coupling if c == "log" else (lambda m, c=float(c): c)
        report = run_m_regularized(ds.X, ds.y, kernel, g["ms"], coupling, g["trials"],
                                   g["holdout_fraction"], cfg["seed"], g["metric"], **common)
    if g["effdim"]:
        lam = report.winner[1]
        report.metadata["effective_dimension"] = {
            "lambda": lam,
            "value": effective_dimension_table(ds.X, kernel, [lam], cfg["max_dense_n"])[0].value,
        }
    timing = None
    if g["timing_comparison"] is not None:
        timing = timing_comparison(ds.X, ds.y, kernel, g["timing_comparison"], cfg["seed"])
    report.write_surface_csv(os.path.join(out, "surface.csv"), cfg)
    report.write_summary_json(os.path.join(out, "summary.json"), cfg)
    if timing is not None:
        # wall-clock numbers live in their own file so summary.json stays reproducible
        with open(os.path.join(out, "timing.json"), "w") as f:
            json.dump({"config": cfg, **timing}, f, indent=2, sort_keys=True)
    if report.models:
        save_model(report.models[0], os.path.join(out, "model.json"), {"config": cfg})
    s = report.summary()
    log.info("winner m=%d lambda=%g val=%g", s["winner"]["m"], s["winner"]["lambda"],
             s["winner"]["mean_val_error"])
    return EXIT_OK


def timing_comparison(X, y, kernel, tc, seed):
    """Wall time of one incremental path vs refitting at every level."""
    m_max, T, lam = int(tc["m_max"]), int(tc["levels"]), float(tc["lambda"])
    if m_max > X.shape[0]:
        raise InputError(f"timing comparison m_max={m_max} exceeds n={X.shape[0]}")
    levels = lin_grid(1, m_max, T)
    L = X[sample_indices(SamplingPlan("plain", m_max, seed, (0, STREAM_LANDMARKS)), X.shape[0])]
    t0 = time.perf_counter()
    run_path(X, y, kernel, lam, L, levels=levels)
    t1 = time.perf_counter()
    naive_path(X, y, kernel, lam, L, levels)
    t2 = time.perf_counter()
    return {"levels": levels, "lambda": lam, "incremental_seconds": t1 - t0, "naive_seconds": t2 - t1}


def cmd_path(cfg, out, threads):
    ds = _dataset(cfg)
    kernel = KernelSpec(cfg["kernel"]["sigma"])
    p = cfg["path"]
    lam, m = float(p["lambda"]), int(p["m"])
    X, y, Xv, yv = ds.X, ds.y, None, None
    if p["holdout_fraction"] is not None:
        fit, val = holdout_split(ds.n, p["holdout_fraction"], make_rng(cfg["seed"], 0, STREAM_SPLIT))
        X, y, Xv, yv = ds.X[fit], ds.y[fit], ds.X[val], ds.y[val]
    if m > X.shape[0]:
        raise InputError(f"path.m = {m} exceeds the {X.shape[0]} available points")
    L = X[sample_indices(SamplingPlan("plain", m, cfg["seed"], (0, STREAM_LANDMARKS)), X.shape[0])]
    records = []

    def emit(t, model, elapsed):
        rec = {"type": "level", "t": t, "lambda": lam, "wall_clock": elapsed}
        if Xv is not None:
            rec["val_error"] = score(predict(model, Xv), yv, p["metric"])
        records.append(rec)

    res = run_path(X, y, kernel, lam, L, emit=emit, check=p["check"])
    with open(os.path.join(out, "path.ndjson"), "w") as f:
        f.write(json.dumps({"type": "config", "config": cfg}, sort_keys=True) + "\n")
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
        f.write(json.dumps({"type": "stats", "recoveries": res.recoveries,
                            "max_factor_error": res.max_factor_error}, sort_keys=True) + "\n")
    save_model(res.models[-1], os.path.join(out, "model.json"), {"config": cfg})
    return EXIT_OK


def cmd_scores(cfg, out, threads):
    ds = _dataset(cfg)
    kernel = KernelSpec(cfg["kernel"]["sigma"])
    s = cfg["scores"]
    if s["sketch_size"] is None:
        scores = leverage_scores_exact(ds.X, kernel, s["t"], cfg["max_dense_n"])
    else:
        scores = leverage_scores_approx(ds.X, kernel, s["t"], s["sketch_size"], cfg["seed"],
                                        validate=s["validate"], max_dense_n=cfg["max_dense_n"])
    comments = ["config: " + json.dumps(cfg, sort_keys=True)]
    if scores.T is not None:
        comments.append(f"approximation_factor: {scores.T!r}")
    write_scores_csv(scores, os.path.join(out, "scores.csv"), comments)
    return EXIT_OK


def cmd_effdim(cfg, out, threads):
    ds = _dataset(cfg)
    kernel = KernelSpec(cfg["kernel"]["sigma"])
    table = effective_dimension_table(ds.X, kernel, cfg["effdim"]["lambdas"], cfg["max_dense_n"])
    with open(os.path.join(out, "effdim.csv"), "w") as f:
        f.write("# config: " + json.dumps(cfg, sort_keys=True) + "\n")
        f.write("lambda,effective_dimension\n")
        for e in table:
            f.write(f"{e.lam!r},{format(e.value, '.17g')}\n")
    return EXIT_OK


COMMANDS = {"grid": cmd_grid, "path": cmd_path, "scores": cmd_scores, "effdim": cmd_effdim}


def build_parser():
    parser = argparse.ArgumentParser(prog="nystrom", description="Nystrom KRLS experiments")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        try:
            with open(args.config) as f:
                raw = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config {args.config}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {args.config} is not valid JSON: {e}") from None
        cfg = resolve_config(raw, args.command)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out, args.threads)
    except ConfigError as e:
        log.error("config error: %s", e)
        return EXIT_CONFIG
    except ResourceCapError as e:
        log.error("resource cap: %s", e)
        return EXIT_CAP
    except InputError as e:
        log.error("data error: %s", e)
        return EXIT_DATA
    except NystromError as e:
        log.error("%s", e)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
