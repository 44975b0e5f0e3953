"""Command-line interface.

    pcconv <command> [--config FILE] [--key value ...]

Commands: coeffs, response, fit, synth, train, eval, oracle-check.  Settings
come from built-in defaults, then the ``key=value`` config file, then flags.
Everything is validated before the output directory is touched.

Exit status: 0 success, 1 runtime failure (or a failed oracle check),
2 invalid configuration.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .data import load_dataset, make_split, parse_split, save_dataset, sbm_generate
from .errors import InvalidArgumentError
from .filters import FilterParams, apply_conv, scalar_response, spectral_oracle, twofold_closed_form
from .fit import TARGETS, fit_least_squares, spectral_grid, target_zoo
from .graph import NormalizationConfig, pc_laplacian, psd_feasible_p, standard_laplacian
from .model import MODES, ModelConfig, TrainConfig, baseline_mode, evaluate, load_model, save_model, train
from .pcpoly import build_table, check_t

COMMANDS = ("coeffs", "response", "fit", "synth", "train", "eval", "oracle-check")


class ConfigError(Exception):
    pass


def _int(s):
    return int(s)


def _bool(s):
    if str(s).lower() in ("1", "true", "yes", "on"):
        return True
    if str(s).lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s):
    return tuple(float(x) for x in str(s).split(",") if x.strip())


def _opt_float(s):
    return None if str(s).lower() in ("", "none") else float(s)


# key -> (parser, default, help)
SCHEMA = {
    "eta": (float, 0.5, "normalization exponent"),
    "p": (float, 2.0, "self-loop weight; the operator is (p-1)I - A_norm"),
    "t": (float, 0.5, "diffusion scale of the heterophilic heat kernel"),
    "N": (_int, 10, "truncation order of the Poisson-Charlier series"),
    "K": (_int, 5, "number of PC filters in the bank"),
    "hidden": (_int, 64, "hidden width of the 2-layer feature MLP"),
    "mlp_layers": (_int, 2, "1 (linear) or 2 (MLP) feature layers"),
    "dropout": (float, 0.5, "dropout rate after the hidden ReLU"),
    "lr": (float, 0.01, "Adam learning rate"),
    "theta_lr": (_opt_float, None, "learning rate for theta (default: lr)"),
    "weight_decay": (float, 5e-4, "L2 penalty on weight matrices"),
    "max_epochs": (_int, 1000, "epoch budget"),
    "patience": (_int, 200, "early-stopping patience in epochs"),
    "seed": (_int, 0, "random seed"),
    "mode": (str, "pcnet", "pcnet | lowpass | mlp_only"),
    "split": (str, "ratio:0.6/0.2", "citation | sparse | ratio:a/b"),
    "dataset_dir": (str, None, "dataset directory (edges.tsv, features.csv, labels.csv)"),
    "out_dir": (str, "pcconv-out", "output directory"),
    "model": (str, None, "model file for eval/response"),
    "theta": (_floats, None, "comma-separated filter weights for response"),
    "grid": (_int, 201, "number of lambda grid points on [0, 2]"),
    "target": (str, "low_band_pass", "fit target: " + ", ".join(sorted(TARGETS))),
    "m": (_int, 600, "synth: number of nodes"),
    "C": (_int, 3, "synth: number of classes"),
    "p_in": (float, 0.05, "synth: intra-class edge probability"),
    "p_out": (float, 0.005, "synth: inter-class edge probability"),
    "d": (_int, 16, "synth: feature dimension"),
    "mu": (float, 1.0, "synth: class-mean magnitude"),
    "sigma": (float, 1.0, "synth: feature noise"),
    "row_normalize": (_bool, False, "L1-normalize feature rows after loading"),
    "alpha1": (float, 0.3, "oracle-check: heterophilic balance weight"),
    "alpha2": (float, 1.0, "oracle-check: homophilic balance weight"),
}


def read_config_file(path) -> dict:
    raw = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        raw[key] = value
    return raw


def resolve(file_values: dict, flag_values: dict) -> dict:
    """Defaults <- config file <- flags, parsed to their declared types."""
    cfg = {key: default for key, (_, default, _) in SCHEMA.items()}
    for source in (file_values, flag_values):
        for key, value in source.items():
            if value is None:
                continue
            parse = SCHEMA[key][0]
            try:
                cfg[key] = parse(value)
            except ValueError as exc:
                raise ConfigError(f"invalid value for {key}: {value!r} ({exc})") from None
    return cfg


@dataclass
class Context:
    command: str
    cfg: dict

    @property
    def out(self) -> Path:
        return Path(self.cfg["out_dir"])

    def prepare(self):
        self.out.mkdir(parents=True, exist_ok=True)
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        lines = [f"# written {stamp}", f"command={self.command}", f"version={__version__}"]
        lines += [f"{key}={_fmt(self.cfg[key])}" for key in sorted(self.cfg)]
        (self.out / "run.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(value):
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _model_config(cfg) -> ModelConfig:
    mc = ModelConfig(t=cfg["t"], p=cfg["p"], eta=cfg["eta"], N=cfg["N"], K=cfg["K"],
                     hidden=cfg["hidden"], mlp_layers=cfg["mlp_layers"], dropout=cfg["dropout"])
    return baseline_mode(mc, cfg["mode"])


def _train_config(cfg) -> TrainConfig:
    return TrainConfig(lr=cfg["lr"], weight_decay=cfg["weight_decay"], theta_lr=cfg["theta_lr"],
                       max_epochs=cfg["max_epochs"], patience=cfg["patience"], seed=cfg["seed"])


def _require(cfg, key):
    if cfg[key] is None:
        raise InvalidArgumentError(f"{key} is required for this command")
    return cfg[key]


def _load(cfg):
    ds = load_dataset(cfg["dataset_dir"])
    return ds.row_normalized() if cfg["row_normalize"] else ds


# -- commands: validate eagerly, then hand back the runner ----------------

def cmd_coeffs(ctx):
    cfg = ctx.cfg
    check_t(cfg["t"], cfg["K"])
    if cfg["N"] < 0 or cfg["K"] < 1:
        raise InvalidArgumentError("need N >= 0 and K >= 1")

    def run():
        table = build_table(cfg["t"], cfg["N"], cfg["K"])
        rows = [(n, k, float(table.coeffs[n, k - 1])) for k in range(1, table.K + 1) for n in range(table.N + 1)]
        _write_csv(ctx.out / "coeffs.csv", ("n", "k", "C"), rows)
        print(f"wrote {len(rows)} coefficients to {ctx.out / 'coeffs.csv'}")
        return 0
    return run


def cmd_response(ctx):
    cfg = ctx.cfg
    if cfg["grid"] < 2:
        raise InvalidArgumentError("grid needs at least 2 points")
    if cfg["model"] is not None:
        model_path = Path(cfg["model"])
        if not model_path.is_file():
            raise InvalidArgumentError(f"model file {model_path} not found")
        params = None
    else:
        theta = cfg["theta"]
        if theta is None:
            theta = np.full(cfg["K"] + 1, 1.0 / cfg["K"])
            theta[0] = 1.0
        params = FilterParams(theta, cfg["t"], cfg["p"], cfg["eta"], cfg["N"])

    def run():
        nonlocal params
        if params is None:
            params = load_model(cfg["model"]).filter_params()
        lam = spectral_grid(cfg["grid"])
        g = scalar_response(params, lam)
        _write_csv(ctx.out / "response.csv", ("lambda", "response"), zip(map(float, lam), map(float, g)))
        print(f"wrote {len(lam)} response samples to {ctx.out / 'response.csv'}")
        return 0
    return run


def cmd_fit(ctx):
    cfg = ctx.cfg
    target = target_zoo(cfg["target"])
    K, N, t, grid = cfg["K"], cfg["N"], cfg["t"], cfg["grid"]
    check_t(t, K)
    if N < K:
        raise InvalidArgumentError(f"fit needs N >= K (N={N}, K={K})")
    if grid < K + 2:
        raise InvalidArgumentError(f"grid must have at least K+2={K + 2} points")

    def run():
        res = fit_least_squares(target, grid, K, N, t)
        _write_csv(ctx.out / "fit_curve.csv", ("lambda", "target", "fitted"),
                   zip(map(float, res.grid), map(float, res.target_values), map(float, res.responses)))
        _write_csv(ctx.out / "fit_theta.csv", ("k", "theta"), enumerate(map(float, res.theta)))
        print(f"target={target.name} K={K} N={N} t={t} rmse={res.rmse:.6g}")
        return 0
    return run


def cmd_synth(ctx):
    cfg = ctx.cfg
    m, C = cfg["m"], cfg["C"]
    if C < 1 or m < 2 * C:
        raise InvalidArgumentError("need m >= 2C")
    if not (0 <= cfg["p_in"] <= 1 and 0 <= cfg["p_out"] <= 1) or cfg["p_in"] == cfg["p_out"] == 0:
        raise InvalidArgumentError("edge probabilities must lie in [0, 1] and not both be 0")
    if cfg["d"] < 1 or cfg["sigma"] < 0:
        raise InvalidArgumentError("need d >= 1 and sigma >= 0")

    def run():
        ds = sbm_generate(m, C, cfg["p_in"], cfg["p_out"], cfg["d"], cfg["mu"], cfg["sigma"], cfg["seed"])
        h = ds.homophily() if ds.graph.n_edges else float("nan")
        meta = {"m": m, "C": C, "p_in": repr(cfg["p_in"]), "p_out": repr(cfg["p_out"]),
                "seed": cfg["seed"], "edges": ds.graph.n_edges, "h": repr(h)}
        save_dataset(ds, ctx.out, meta)
        print(f"wrote SBM dataset to {ctx.out}: m={m} |E|={ds.graph.n_edges} h={h:.4f}")
        return 0
    return run


def cmd_train(ctx):
    cfg = ctx.cfg
    _require(cfg, "dataset_dir")
    mc, tc = _model_config(cfg), _train_config(cfg)
    parse_split(cfg["split"])

    def run():
        ds = _load(cfg)
        split = make_split(ds, cfg["split"], cfg["seed"])
        model, history = train(ds, split, mc, tc)
        L = model.operator(ds.graph)
        test_acc = evaluate(model, ds, split.test_idx, L)
        _write_csv(ctx.out / "history.csv", ("epoch", "train_loss", "val_acc"),
                   ((e, float(lo), float(v)) for e, lo, v in history.rows()))
        save_model(model, ctx.out / "model.pcn")
        (ctx.out / "metrics.txt").write_text(
            f"epochs={len(history)}\nbest_epoch={history.best_epoch}\n"
            f"val_acc={history.best_val_acc!r}\ntest_acc={test_acc!r}\n", encoding="utf-8")
        print(f"epochs={len(history)} best_epoch={history.best_epoch} "
              f"val_acc={history.best_val_acc:.4f} test_acc={test_acc:.4f}")
        return 0
    return run


def cmd_eval(ctx):
    cfg = ctx.cfg
    _require(cfg, "dataset_dir")
    model_path = Path(_require(cfg, "model"))
    if not model_path.is_file():
        raise InvalidArgumentError(f"model file {model_path} not found")
    parse_split(cfg["split"])

    def run():
        ds = _load(cfg)
        split = make_split(ds, cfg["split"], cfg["seed"])
        model = load_model(model_path)
        L = model.operator(ds.graph)
        accs = {name: evaluate(model, ds, getattr(split, f"{name}_idx"), L) for name in ("train", "val", "test")}
        text = "".join(f"{name}_acc={acc!r}\n" for name, acc in accs.items())
        (ctx.out / "eval.txt").write_text(text, encoding="utf-8")
        print(" ".join(f"{name}_acc={acc:.4f}" for name, acc in accs.items()))
        return 0
    return run


def cmd_oracle_check(ctx):
    cfg = ctx.cfg
    check_t(cfg["t"], cfg["K"])
    NormalizationConfig(cfg["eta"], cfg["p"])
    if cfg["m"] < 2 or cfg["m"] > 500:
        raise InvalidArgumentError("oracle-check needs 2 <= m <= 500")
    interval = psd_feasible_p(cfg["t"], cfg["alpha1"])
    if cfg["p"] not in interval:
        raise InvalidArgumentError(f"p={cfg['p']} is outside the feasible interval "
                                   f"[{interval.lower}, {interval.upper}) for t={cfg['t']}, alpha1={cfg['alpha1']}")
    if not cfg["alpha2"] > 0:
        raise InvalidArgumentError("alpha2 must be positive")

    def run():
        rng = np.random.default_rng(cfg["seed"])
        m = cfg["m"]
        ds = sbm_generate(m, 2, 0.1, 0.05, 4, seed=cfg["seed"])
        X = rng.standard_normal((m, 3))
        params = FilterParams(rng.uniform(-1, 1, cfg["K"] + 1), cfg["t"], cfg["p"], cfg["eta"], cfg["N"])
        L = pc_laplacian(ds.graph, NormalizationConfig(cfg["eta"], cfg["p"]))
        filt_dev = np.abs(apply_conv(L, X, params) - spectral_oracle(L.to_dense(), X, params)).max()
        filt_dev /= max(1.0, np.abs(X).max())
        L0 = standard_laplacian(ds.graph).to_dense()
        z1 = twofold_closed_form(L0, X, cfg["alpha1"], cfg["alpha2"], cfg["t"], cfg["p"], "hetero_first")
        z2 = twofold_closed_form(L0, X, cfg["alpha1"], cfg["alpha2"], cfg["t"], cfg["p"], "homo_first")
        order_dev = np.abs(z1 - z2).max()
        ok = filt_dev <= 1e-8 and order_dev <= 1e-10
        report = f"max_filter_dev={filt_dev:.3e}\ntwofold_order_dev={order_dev:.3e}\nstatus={'pass' if ok else 'FAIL'}\n"
        (ctx.out / "oracle.txt").write_text(report, encoding="utf-8")
        sys.stdout.write(report)
        return 0 if ok else 1
    return run


HANDLERS = {
    "coeffs": cmd_coeffs,
    "response": cmd_response,
    "fit": cmd_fit,
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "oracle-check": cmd_oracle_check,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcconv", description="Poisson-Charlier graph convolution toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value configuration file")
        for key, (_, default, help_text) in SCHEMA.items():
            p.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE",
                           help=f"{help_text} (default: {default})")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        file_values = read_config_file(args.config) if args.config else {}
        flags = {key: getattr(args, key) for key in SCHEMA}
        cfg = resolve(file_values, flags)
        if cfg["mode"] not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        ctx = Context(args.command, cfg)
        run = HANDLERS[args.command](ctx)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"pcconv: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        ctx.prepare()
        return run()
    except Exception as exc:  # noqa: BLE001 - every failure maps to exit status 1
        print(f"pcconv: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
