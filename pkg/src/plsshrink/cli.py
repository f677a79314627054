"""Command line interface: ``plsshrink {factors,fit,simulate,cv}``.

Every run writes machine-readable CSV reports (``<out>/<command>_<tag>.csv``),
a human table per report (same name, ``.txt``) and ``<out>/manifest.json``.
CSV files start with ``#`` comment lines echoing the tool version, the seed
and the effective configuration; floats are written with ``repr`` so they
round-trip exactly.  Identical configuration and seed give byte-identical
files.

Failures print one line to stderr,

    plsshrink: error kind=<ArgumentError|DataError|NumericalError> exit=<code> reason=<text>

followed by optional detail lines, and exit with status 2 (configuration),
3 (data) or 4 (numerical failure).
"""

import argparse
import csv
import hashlib
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ArgumentError, DataError, NumericalError, PLSShrinkError
from .estimators import (
    ols,
    pcr,
    pls_krylov,
    ridge,
    standardize,
)
from .krylov import lanczos
from .linalg import as_symmetric, sym_eigen
from .shrinkage import bound_estimator, clip, shrinkage_factors
from .simulate import (
    SIM_METHODS,
    calibrate_sigma,
    draw_response,
    estimate_mse,
    example_spec,
    generate_design,
    kfold_cv,
)

EXIT_CODES = {ArgumentError: 2, DataError: 3, NumericalError: 4}

DEFAULTS = {
    "example": None,
    "input": None,
    "gram": None,
    "target": "y",
    "methods": "pls,bound",
    "m_range": None,
    "stnr": "1,4,16",
    "K": 200,
    "folds": 10,
    "seed": 0,
    "penalty": 1.0,
    "out": "plsshrink_out",
    "estimand": "both",
    "empirical_variance": False,
    "no_scale_y": False,
}


# ---------------------------------------------------------------- input


def ingest_csv(path, target_column):
    """Read a headed, comma-separated numeric table.

    Returns ``(Xraw, yraw, names)`` where X holds the non-target columns in
    header order and ``names`` their headers.

    Raises
    ------
    DataError
        On a missing target column, a non-finite or unparsable cell (the
        message names row and column) or fewer than two rows.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise ArgumentError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise DataError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if target_column not in header:
        raise DataError(
            f"target column {target_column!r} not found; available: {', '.join(header)}"
        )
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"row {i} has {len(row)} cells, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                raise DataError(f"row {i}, column {header[j]!r}: invalid number {cell.strip()!r}")
            values[i - 2, j] = v
    if values.shape[0] < 2:
        raise DataError(f"{path} has {values.shape[0]} data rows; need at least 2")
    t = header.index(target_column)
    keep = [j for j in range(len(header)) if j != t]
    return values[:, keep], values[:, t], [header[j] for j in keep]


def write_csv(path, header, rows, comments=()):
    """Write rows with ``#`` comment lines; floats use round-trip ``repr``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            raise NumericalError(f"refusing to write non-finite value {v}")
        return repr(v)
    if isinstance(v, (np.integer, np.bool_)):
        return str(int(v))
    return str(v)


def _human(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.4g}"
    return str(v)


def write_table(path, header, rows, title):
    cells = [[_human(v) for v in row] for row in rows]
    widths = [max([len(h)] + [len(r[j]) for r in cells]) for j, h in enumerate(header)]
    lines = [title, "  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- parsing


def parse_m_range(text):
    """``"A..B"`` -> [A, ..., B]; a single integer gives a one-element range."""
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise ArgumentError(f"bad step range {text!r}; expected A..B") from None
    if lo < 1 or hi < lo:
        raise ArgumentError(f"bad step range {text!r}; need 1 <= A <= B")
    return list(range(lo, hi + 1))


def parse_stnr(text):
    try:
        levels = [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ArgumentError(f"bad stnr list {text!r}") from None
    if not levels or any(not v > 0 for v in levels):
        raise ArgumentError(f"stnr levels must be positive, got {text!r}")
    return levels


def parse_methods(text):
    methods = [t.strip().lower() for t in str(text).split(",") if t.strip()]
    unknown = [m for m in methods if m not in SIM_METHODS]
    if not methods or unknown:
        raise ArgumentError(f"unknown methods {unknown}; choose from {','.join(SIM_METHODS)}")
    return methods


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def build_parser():
    parser = _Parser(prog="plsshrink", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"plsshrink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS

    def common(p, data=True):
        if data:
            src = p.add_mutually_exclusive_group()
            src.add_argument("--example", type=int, choices=(1, 2, 3), default=S,
                             help="synthetic example design")
            src.add_argument("--input", default=S, help="CSV file with a header row")
        p.add_argument("--target", default=S, help="response column of --input (default y)")
        p.add_argument("--methods", default=S, help="comma list from pls,bound,ols,pcr,ridge")
        p.add_argument("--m-range", dest="m_range", default=S, help="steps A..B")
        p.add_argument("--stnr", default=S, help="comma list of signal-to-noise ratios")
        p.add_argument("--seed", type=int, default=S, help="master seed (default 0)")
        p.add_argument("--penalty", type=float, default=S, help="ridge penalty (default 1)")
        p.add_argument("--out", default=S, help="output directory")
        p.add_argument("--config", default=None, help="JSON file with default flag values")

    p = sub.add_parser("factors", help="shrinkage factors and Ritz values per step")
    common(p)
    p.add_argument("--gram", default=S,
                   help="CSV holding A = X^t X plus the column --target as b = X^t y")
    p = sub.add_parser("fit", help="fit estimators and report coefficients")
    common(p)
    p.add_argument("--no-scale-y", dest="no_scale_y", action="store_true", default=S)
    p = sub.add_parser("simulate", help="Monte-Carlo MSE curves")
    common(p, data=False)
    p.add_argument("--example", type=int, choices=(1, 2, 3), default=S, required=True)
    p.add_argument("--K", type=int, default=S, help="replicates (default 200)")
    p.add_argument("--estimand", choices=("both", "beta", "xbeta"), default=S,
                   help="estimation target (default both; p > n forces xbeta)")
    p.add_argument("--empirical-variance", dest="empirical_variance", action="store_true",
                   default=S, help="calibrate sigma with the realized var(X beta)")
    p = sub.add_parser("cv", help="k-fold cross-validation curves")
    common(p)
    p.add_argument("--folds", type=int, default=S, help="number of folds (default 10)")
    return parser


def resolve_config(argv):
    """Merge defaults, the JSON config file and command-line flags (in that order)."""
    ns = build_parser().parse_args(argv)
    cfg = dict(DEFAULTS)
    if ns.config is not None:
        try:
            loaded = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ArgumentError(f"cannot read config {ns.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"config {ns.config} is not valid JSON: {exc.msg}") from None
        if not isinstance(loaded, dict):
            raise ArgumentError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise ArgumentError(f"unknown config keys {unknown}")
        cfg.update(loaded)
    cfg.update({k: v for k, v in vars(ns).items() if k not in ("config", "command")})
    cfg["command"] = ns.command
    sources = [k for k in ("example", "input", "gram") if cfg.get(k) is not None]
    if ns.command != "simulate" and len(sources) != 1:
        raise ArgumentError("give exactly one of --example, --input or --gram")
    if cfg.get("gram") is not None and ns.command != "factors":
        raise ArgumentError("--gram is only valid for the factors command")
    if ns.command == "simulate" and cfg.get("input") is not None:
        raise ArgumentError("simulate needs --example, not --input")
    for key in ("K", "folds", "seed"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool) or cfg[key] < 0:
            raise ArgumentError(f"{key} must be a non-negative integer, got {cfg[key]!r}")
    return cfg


# ---------------------------------------------------------------- commands


class Run:
    """Collects report files and writes the manifest."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.out = Path(cfg["out"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []

    @property
    def comments(self):
        # the output directory is left out so reports compare equal across runs
        shown = {k: v for k, v in self.cfg.items() if k != "out"}
        echo = json.dumps(shown, sort_keys=True, separators=(",", ":"))
        return [f"plsshrink {__version__}", f"seed: {self.cfg['seed']}", f"config: {echo}"]

    def report(self, tag, header, rows, title):
        name = f"{self.cfg['command']}_{tag}"
        write_csv(self.out / f"{name}.csv", header, rows, self.comments)
        write_table(self.out / f"{name}.txt", header, rows, title)
        self.files += [f"{name}.csv", f"{name}.txt"]

    def finish(self):
        entries = []
        for name in self.files:
            digest = hashlib.sha256((self.out / name).read_bytes()).hexdigest()
            entries.append({"file": name, "sha256": digest})
        manifest = {
            "tool": "plsshrink",
            "version": __version__,
            "command": self.cfg["command"],
            "seed": self.cfg["seed"],
            "config": self.cfg,
            "files": entries,
        }
        (self.out / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )


def load_data(cfg):
    """Raw (X, y) from --input or from a seeded draw of an example design.

    For an example the response uses the first stnr level.
    """
    if cfg.get("input") is not None:
        X, y, names = ingest_csv(cfg["input"], cfg["target"])
        return X, y, names
    spec = example_spec(cfg["example"], cfg["seed"])
    X, beta = generate_design(spec)
    sigma = calibrate_sigma(spec.covariance, beta, parse_stnr(cfg["stnr"])[0])
    seq = np.random.SeedSequence(cfg["seed"]).spawn(3)[2]
    y = draw_response(X, beta, sigma, seq)
    return X, y, [f"x{j + 1}" for j in range(spec.p)]


def _steps(cfg, top):
    if cfg.get("m_range") is None:
        return list(range(1, top + 1))
    return parse_m_range(cfg["m_range"])


def cmd_factors(cfg):
    run = Run(cfg)
    if cfg.get("gram") is not None:
        M, b, _ = ingest_csv(cfg["gram"], cfg["target"])
        if M.shape[0] != M.shape[1]:
            raise DataError(f"Gram table is {M.shape[0]}x{M.shape[1]}, expected square")
        A = as_symmetric(M)
        eig = sym_eigen(A)
    else:
        X, y, _ = load_data(cfg)
        data = standardize(X, y, scale_y=not cfg["no_scale_y"])
        A, b, eig = data.gram, data.cross, data.eig
    if not np.any(b):
        raise DataError("X^t y is zero; no shrinkage factors exist")
    state = lanczos(A, b)
    steps = [m for m in _steps(cfg, state.steps) if m <= state.steps]
    if not steps:
        raise ArgumentError(f"no requested step lies within 1..{state.steps} (m*)")
    rows, ritz_rows = [], []
    for m in steps:
        prof = shrinkage_factors(state, eig, m)
        for i, (k, lam, f) in enumerate(zip(prof.eigen_index, prof.lambdas, prof.factors)):
            rows.append([m, int(k) + 1, lam, f, float(clip(f))])
        for j, mu in enumerate(prof.ritz, start=1):
            ritz_rows.append([m, j, mu])
    run.report("factors", ["m", "i", "lambda", "factor", "clipped"], rows,
               f"shrinkage factors f^(m)(lambda_i), m* = {state.m_star}")
    run.report("ritz", ["m", "j", "ritz"], ritz_rows, "Ritz values of T^(m)")
    run.finish()


def cmd_fit(cfg):
    run = Run(cfg)
    X, y, names = load_data(cfg)
    data = standardize(X, y, scale_y=not cfg["no_scale_y"])
    methods = parse_methods(cfg["methods"])
    state = lanczos(data.gram, data.cross) if np.any(data.cross) else None
    top = state.steps if state is not None else data.p
    results = []
    for method in methods:
        if method in ("ols", "ridge"):
            results.append(ols(data) if method == "ols" else ridge(data, cfg["penalty"]))
            continue
        for m in _steps(cfg, top):
            if method == "pcr":
                results.append(pcr(data, min(m, data.rank)))
            elif method == "pls":
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    results.append(pls_krylov(data, m, state=state))
            else:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    results.append(bound_estimator(data, m, state=state))
    summary, coefs = [], []
    for r in results:
        hyper = "" if r.hyper is None else r.hyper
        rss = float(np.sum((data.y - r.fitted) ** 2))
        summary.append([r.method, hyper, "" if r.steps is None else r.steps, r.clipped,
                        rss, float(np.linalg.norm(r.beta))])
        coefs += [[r.method, hyper, name, b] for name, b in zip(names, r.beta)]
    run.report("summary", ["method", "hyper", "steps", "clipped", "rss", "beta_norm"],
               summary, f"fitted estimators, m* = {None if state is None else state.m_star}")
    run.report("coefficients", ["method", "hyper", "variable", "beta"], coefs,
               "coefficients on the standardized scale")
    run.finish()


def _stnr_tag(level):
    return "inf" if math.isinf(level) else f"{level:g}".replace(".", "p")


def cmd_simulate(cfg):
    run = Run(cfg)
    spec = example_spec(cfg["example"], cfg["seed"])
    methods = parse_methods(cfg["methods"])
    reports = estimate_mse(spec, parse_stnr(cfg["stnr"]), cfg["K"], methods,
                           cfg["estimand"], cfg["penalty"], cfg["empirical_variance"])
    long_rows, best_rows = [], []
    for rep in reports:
        cols = [(m, t) for t in rep.targets for m in methods]
        header = ["m"] + [f"{m}_{t}" for m, t in cols]
        rows = [[int(s)] + [rep.mse[c][j] for c in cols] for j, s in enumerate(rep.steps)]
        run.report(f"stnr{_stnr_tag(rep.stnr)}", header, rows,
                   f"example {rep.example_id}, stnr {rep.stnr:g}, sigma {rep.sigma:.4g}, "
                   f"K {rep.K}: estimated MSE per step")
        for m, t in cols:
            best_rows.append([rep.stnr, t, m, rep.optimal_step(m, t),
                              float(np.min(rep.mse[(m, t)]))])
            long_rows += [[rep.stnr, t, m, int(s), v]
                          for s, v in zip(rep.steps, rep.mse[(m, t)])]
    run.report("long", ["stnr", "target", "method", "m", "mse"], long_rows,
               "estimated MSE, long format")
    run.report("optimal", ["stnr", "target", "method", "m_opt", "mse_min"], best_rows,
               "MSE-optimal step per method (ties to the smaller step)")
    run.finish()


def cmd_cv(cfg):
    run = Run(cfg)
    X, y, _ = load_data(cfg)
    methods = parse_methods(cfg["methods"])
    steps = _steps(cfg, X.shape[1])
    rep = kfold_cv(X, y, methods, steps, cfg["folds"], cfg["seed"], cfg["penalty"])
    rows = [[int(s)] + [rep.errors[m][j] for m in methods] for j, s in enumerate(rep.steps)]
    run.report("curve", ["m"] + methods, rows,
               f"{rep.folds}-fold cross-validation error per step")
    fold_rows = []
    for f in range(rep.folds):
        for j, s in enumerate(rep.steps):
            fold_rows += [[f + 1, m, int(s), rep.fold_errors[m][f, j],
                           int(rep.clip_events[f, j])] for m in methods]
    run.report("folds", ["fold", "method", "m", "error", "clip_event"], fold_rows,
               "per-fold prediction error")
    run.finish()


COMMANDS = {"factors": cmd_factors, "fit": cmd_fit, "simulate": cmd_simulate, "cv": cmd_cv}


def _exit_code(exc):
    for cls, code in EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    return 4


def main(argv=None):
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        COMMANDS[cfg["command"]](cfg)
    except (PLSShrinkError, np.linalg.LinAlgError) as exc:
        code = _exit_code(exc)
        kind = type(exc).__name__ if isinstance(exc, PLSShrinkError) else "NumericalError"
        reason = " ".join(str(exc).split())
        print(f"plsshrink: error kind={kind} exit={code} reason={reason}", file=sys.stderr)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
