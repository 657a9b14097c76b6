"""Command-line driver: ``tdlg <subcommand> [flags]``.

Settings resolve as CLI flags > ``--config`` file > built-in defaults, and
every report embeds the resolved settings under ``run_config``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import embeddings, linegraph, pipelines, tsbm
from .eigen import dense_embed
from .graph import build_incidence, bundled_manifest, load_dataset, load_edge_list, load_manifest
from .linegraph import TdlgConfig

logger = logging.getLogger("tdlg")

DEFAULTS = {
    "data": None,
    "dataset": None,
    "manifest": None,
    "delimiter": ",",
    "columns": "u,v,t,label",
    "label_threshold": 0.0,
    "sigma_ratio": None,
    "sigma_t": None,
    "normalization": "none",
    "dense_k": None,
    "trials": None,
    "seed": pipelines.DEFAULT_SEED,
    "train_frac": 0.7,
    "intervals": 20,
    "setting": "interp",
    "out": None,
    "format": "json",
    "verbose": 0,
    # build / embed
    "matrix_format": "coo",
    "node_embeddings": False,
    # sweep
    "sweep": "sigma",
    "ratios": "0.001,0.01,0.1,1,10",
    "task": "classify",
    # tsbm / verify-theory
    "n": 100,
    "delta": 40,
    "alpha1": 0.9,
    "alpha2": 0.1,
    "mu1": -1.0,
    "mu2": 1.0,
    "sigma1": 0.5,
    "sigma2": 0.5,
    "tags_out": None,
}

SETTING_NAMES = {"interp": "interpolative", "extrap": "extrapolative"}


class CliError(Exception):
    pass


def _add_data_flags(p):
    p.add_argument("--data", help="edge-list file (u,v,t[,label])")
    p.add_argument("--dataset", help="dataset name in --manifest")
    p.add_argument("--manifest", help="dataset manifest (YAML/JSON); default: bundled list, "
                   "files looked up in $TDLG_DATA_DIR")
    p.add_argument("--delimiter", help="field delimiter; 'whitespace' splits on runs of blanks")
    p.add_argument("--columns", help="comma-separated column roles, e.g. u,v,label,t")
    p.add_argument("--label-threshold", type=float, help="label > threshold is class 1")


def _add_tdlg_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sigma-ratio", type=float, help="sigma_t as a multiple of the std of edge times")
    g.add_argument("--sigma-t", type=float, help="absolute sigma_t")
    p.add_argument("--normalization", choices=("none", "spectral", "edge"))


def _add_split_flags(p):
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--train-frac", type=float)
    p.add_argument("--intervals", type=int)


def _add_out_flags(p, formats=("json", "table", "csv")):
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=formats)


def _add_tsbm_flags(p):
    p.add_argument("--n", type=int)
    p.add_argument("--delta", type=int)
    p.add_argument("--alpha1", type=float)
    p.add_argument("--alpha2", type=float)
    p.add_argument("--mu1", type=float)
    p.add_argument("--mu2", type=float)
    p.add_argument("--sigma1", type=float)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="YAML/JSON file of defaults for any flag")
    common.add_argument("-v", "--verbose", action="count")

    parser = argparse.ArgumentParser(prog="tdlg", argument_default=argparse.SUPPRESS,
                                     description="Time-decayed line graph embeddings.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("build", parents=[common], argument_default=argparse.SUPPRESS,
                       help="build a TDLG matrix and export it")
    _add_data_flags(p), _add_tdlg_flags(p)
    p.add_argument("--out", help="output path")
    p.add_argument("--matrix-format", choices=("coo", "csr"))

    p = sub.add_parser("embed", parents=[common], argument_default=argparse.SUPPRESS,
                       help="export edge (or node) embeddings")
    _add_data_flags(p), _add_tdlg_flags(p)
    p.add_argument("--dense-k", type=int, help="k-dim eigen-embedding instead of sparse rows")
    p.add_argument("--node-embeddings", action="store_true", help="average edges onto nodes")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path")

    p = sub.add_parser("classify", parents=[common], argument_default=argparse.SUPPRESS,
                       help="edge classification experiment")
    _add_data_flags(p), _add_tdlg_flags(p), _add_split_flags(p), _add_out_flags(p)
    p.add_argument("--dense-k", type=int)

    p = sub.add_parser("linkpred", parents=[common], argument_default=argparse.SUPPRESS,
                       help="temporal link prediction experiment")
    _add_data_flags(p), _add_tdlg_flags(p), _add_split_flags(p), _add_out_flags(p)
    p.add_argument("--setting", choices=("interp", "extrap", "both"))

    p = sub.add_parser("tsbm", parents=[common], argument_default=argparse.SUPPRESS,
                       help="sample a temporal SBM edge list")
    _add_tsbm_flags(p)
    p.add_argument("--out", help="edge-list output path")
    p.add_argument("--tags-out", help="block-tag sidecar path")

    p = sub.add_parser("verify-theory", parents=[common], argument_default=argparse.SUPPRESS,
                       help="Monte Carlo check of the expected TDLG block values")
    _add_tsbm_flags(p)
    p.add_argument("--sigma-t", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--out")

    p = sub.add_parser("sweep", parents=[common], argument_default=argparse.SUPPRESS,
                       help="sigma-ratio or normalization sweep")
    _add_data_flags(p), _add_tdlg_flags(p), _add_split_flags(p), _add_out_flags(p, ("json", "csv"))
    p.add_argument("--sweep", choices=("sigma", "normalization"))
    p.add_argument("--ratios", help="comma-separated sigma ratios")
    p.add_argument("--task", choices=("classify", "interp", "extrap"))
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    flags = vars(args).copy()
    command = flags.pop("command")
    cfg = dict(DEFAULTS)
    if command == "verify-theory":
        # the analytic block values assume zero within-period time variance
        cfg["sigma1"] = cfg["sigma2"] = 0.0
    if "config" in flags:
        path = flags.pop("config")
        with open(path, encoding="utf-8") as fh:
            from_file = yaml.safe_load(fh) or {}
        # a report's run_config can be fed back as-is
        from_file = from_file.get("run_config", from_file)
        if from_file.pop("command", command) != command:
            raise CliError(f"config file {path} was written for another subcommand")
        unknown = set(from_file) - set(DEFAULTS)
        if unknown:
            raise CliError(f"unknown keys in config file {path}: {sorted(unknown)}")
        cfg.update(from_file)
    if "sigma_t" in flags or "sigma_ratio" in flags:
        cfg["sigma_t"] = cfg["sigma_ratio"] = None
    cfg.update(flags)
    cfg["command"] = command
    return cfg


def _tdlg_config(cfg) -> TdlgConfig:
    if cfg["sigma_t"] is not None and cfg["sigma_ratio"] is not None:
        raise CliError("--sigma-t and --sigma-ratio are mutually exclusive")
    return TdlgConfig(sigma_t=cfg["sigma_t"], sigma_ratio=cfg["sigma_ratio"],
                      normalization=cfg["normalization"])


def _delimiter(d):
    if d in (None, "whitespace", "ws"):
        return None
    return d.encode().decode("unicode_escape")


def _load_graph(cfg, need_labels=False):
    if cfg["dataset"]:
        entries = load_manifest(cfg["manifest"]) if cfg["manifest"] else bundled_manifest()
        if need_labels and cfg["dataset"] in entries:
            entries[cfg["dataset"]].setdefault("has_labels", True)
        return load_dataset(cfg["dataset"], entries)
    if not cfg["data"]:
        raise CliError("no input: pass --data FILE or --dataset NAME")
    if not Path(cfg["data"]).exists():
        raise CliError(f"data file not found: {cfg['data']}")
    return load_edge_list(cfg["data"], delimiter=_delimiter(cfg["delimiter"]), has_labels=need_labels,
                          label_threshold=cfg["label_threshold"],
                          columns=tuple(c.strip() for c in cfg["columns"].split(",")))


def _split(cfg, default_trials):
    return pipelines.SplitSpec(train_fraction=cfg["train_frac"],
                               trials=cfg["trials"] or default_trials,
                               seed=cfg["seed"], intervals=cfg["intervals"])


def _emit(text: str, out):
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_report(report: pipelines.ExperimentReport, cfg):
    report.config["run_config"] = _public(cfg)
    fmt = cfg["format"]
    text = {"json": report.to_json, "table": report.to_table, "csv": report.to_csv}[fmt]()
    _emit(text, cfg["out"])


def _public(cfg):
    return {k: v for k, v in cfg.items() if k != "verbose"}


def _tsbm_params(cfg) -> tsbm.TsbmParams:
    return tsbm.TsbmParams(n=cfg["n"], delta=cfg["delta"], alpha1=cfg["alpha1"], alpha2=cfg["alpha2"],
                           mu1=cfg["mu1"], mu2=cfg["mu2"], sigma1=cfg["sigma1"], sigma2=cfg["sigma2"],
                           seed=cfg["seed"])


def cmd_build(cfg):
    g = _load_graph(cfg)
    A = linegraph.build_tdlg(g, build_incidence(g), _tdlg_config(cfg))
    if not cfg["out"]:
        raise CliError("build requires --out")
    if cfg["matrix_format"] == "csr":
        linegraph.export_csr_binary(A, cfg["out"])
    else:
        linegraph.export_coo_text(A, cfg["out"])
    logger.info("wrote %dx%d matrix with %d entries to %s", *A.shape, A.nnz, cfg["out"])


def cmd_embed(cfg):
    g = _load_graph(cfg)
    inc = build_incidence(g)
    A = linegraph.build_tdlg(g, inc, _tdlg_config(cfg))
    if cfg["dense_k"]:
        Y = embeddings.EmbeddingMatrix(dense_embed(A, cfg["dense_k"], seed=cfg["seed"]), "edge")
    else:
        Y = embeddings.edge_embeddings(A)
    if cfg["node_embeddings"]:
        Y = embeddings.mean_edge_node_embeddings(inc, Y)
    if not cfg["out"]:
        raise CliError("embed requires --out")
    embeddings.export_embeddings(Y, cfg["out"])


def cmd_classify(cfg):
    g = _load_graph(cfg, need_labels=True)
    rep = pipelines.run_edge_classification(g, _tdlg_config(cfg), _split(cfg, 10), cfg["dense_k"])
    _emit_report(rep, cfg)


def cmd_linkpred(cfg):
    g = _load_graph(cfg)
    settings = pipelines.SETTINGS if cfg["setting"] == "both" else (SETTING_NAMES[cfg["setting"]],)
    reps = pipelines.run_link_prediction_settings(g, _tdlg_config(cfg), _split(cfg, 5), settings)
    if len(reps) == 1:
        _emit_report(next(iter(reps.values())), cfg)
        return
    for rep in reps.values():
        rep.config["run_config"] = _public(cfg)
    if cfg["format"] == "json":
        text = json.dumps({k: r.to_dict() for k, r in reps.items()}, indent=2)
    elif cfg["format"] == "table":
        text = "\n\n".join(r.to_table() for r in reps.values())
    else:
        text = "".join(r.to_csv() if i == 0 else r.to_csv().split("\n", 1)[1]
                       for i, r in enumerate(reps.values()))
    _emit(text, cfg["out"])


def cmd_tsbm(cfg):
    if not cfg["out"]:
        raise CliError("tsbm requires --out")
    g, tags = tsbm.generate_tsbm(_tsbm_params(cfg))
    tsbm.write_graph(g, tags, cfg["out"], cfg["tags_out"] or str(cfg["out"]) + ".tags")


def cmd_verify_theory(cfg):
    if cfg["sigma_t"] is None:
        raise CliError("verify-theory requires --sigma-t")
    report = tsbm.verify_theory(_tsbm_params(cfg), cfg["sigma_t"], cfg["trials"] or 20)
    report["run_config"] = _public(cfg)
    _emit(json.dumps(report, indent=2), cfg["out"])


def cmd_sweep(cfg):
    g = _load_graph(cfg, need_labels=cfg["task"] == "classify" or cfg["sweep"] == "normalization")
    if cfg["sweep"] == "normalization":
        reps = pipelines.sweep_normalization(g, cfg=_tdlg_config(cfg), split=_split(cfg, 5))
        best = max(r.mean_auc for r in reps.values())
        result = {"task": "classify", "grid": [
            {"normalization": k, "mean_auc": r.mean_auc, "ci95": r.ci95, "aucs": r.aucs,
             "proportion_of_best": r.mean_auc / best} for k, r in reps.items()]}
    else:
        ratios = [float(x) for x in str(cfg["ratios"]).split(",")]
        task = SETTING_NAMES.get(cfg["task"], cfg["task"])
        result = pipelines.sweep_sigma(g, ratios, task, _tdlg_config(cfg),
                                       _split(cfg, 5))
    result["run_config"] = _public(cfg)
    if cfg["format"] == "csv":
        keys = [k for k in result["grid"][0] if k != "aucs"]
        lines = [",".join(keys)] + [",".join(str(row[k]) for k in keys) for row in result["grid"]]
        _emit("\n".join(lines), cfg["out"])
    else:
        _emit(json.dumps(result, indent=2), cfg["out"])


COMMANDS = {
    "build": cmd_build,
    "embed": cmd_embed,
    "classify": cmd_classify,
    "linkpred": cmd_linkpred,
    "tsbm": cmd_tsbm,
    "verify-theory": cmd_verify_theory,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = resolve_config(args)
        logging.basicConfig(level=logging.WARNING - 10 * min(int(cfg["verbose"] or 0), 2),
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[cfg["command"]](cfg)
    except (CliError, ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"tdlg {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
