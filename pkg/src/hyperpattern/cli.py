"""Command-line pipeline: ingest, enumerate, baseline, train, eval, interpret, selftest.

Exit codes: 0 success, 1 failed check, 2 malformed input or config,
3 unusable checkpoint, 4 training diverged.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import plotting
from .artifacts import jsonable, write_json, write_text
from .baselines import FEATURE_NAMES, feature_table, instance_arrays, train_heuristic_head, write_feature_table
from .config import CONFIG_KEYS, ConfigError, RunConfig, load_config, parse_value
from .hypergraph import (HypergraphFormatError, TemporalHypergraph, find_benson_files, ingest_benson_graph,
                         load_cache, normalize_time, save_cache, stats, write_benson)
from .interpret import rank_categories, write_category_csv
from .metrics import auc_1v1, confusion_matrix, mean_std
from .model import HIT, CheckpointError, load_checkpoint, save_checkpoint
from .patterns import (TIMED_PATTERNS, EmptyClassError, InstanceFormatError, Pattern, balance_classes,
                       enumerate_instances, read_instances, split_counts, write_instances)
from .training import Q3_PAIRS, TrainingDivergedError, evaluate, train

logger = logging.getLogger("hyperpattern")

EXIT_FAILED, EXIT_INPUT, EXIT_CHECKPOINT, EXIT_DIVERGED = 1, 2, 3, 4


class InputError(Exception):
    """Malformed user input that is not a graph file."""


# -- helpers ----------------------------------------------------------------------

def _config(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in CONFIG_KEYS}
    return load_config(args.config, overrides)


def _graph(args, cfg: RunConfig) -> TemporalHypergraph:
    """The cached graph with normalized time; every downstream step works in these units."""
    path = cfg.cache
    if not path:
        raise InputError("no graph cache given (use --cache)")
    return normalize_time(load_cache(path))


def _instances(path: str):
    try:
        with open(path) as fh:
            return read_instances(fh)
    except InstanceFormatError as e:
        raise InputError(f"{path}:{e.line}: {str(e).split(': ', 1)[1]}") from None


def _splits(instances):
    return [[i for i in instances if i.split == s] for s in ("train", "valid", "test")]


def _out_dir(args) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_confusion_csv(path, matrix, header):
    def body(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["truth\\pred"] + [p.name.capitalize() for p in Pattern])
        for p, row in zip(Pattern, matrix):
            w.writerow([p.name.capitalize()] + [int(x) for x in row])
    write_text(path, body, header)


def _write_predictions(path, instances, report, header):
    """One line per row: triplet, then the task's outputs."""
    def body(fh):
        task = report["task"]
        if task == "q1":
            fh.write("u\tv\tw\tt\tlabel\tp_edge\tp_wedge\tp_triangle\tp_closure\n")
            for inst, p in zip(instances, report["probs"]):
                tr = inst.triplet
                fh.write("\t".join([str(tr.u), str(tr.v), str(tr.w), repr(tr.t), inst.label.name.capitalize()]
                                   + [repr(float(x)) for x in p]) + "\n")
        elif task == "q2":
            fh.write("pattern\tt\tt_hat\tnll\n")
            rows = report["rows"]
            for j, t, th, nll in zip(rows["pattern"], rows["t"], rows["t_hat"], rows["nll"]):
                fh.write(f"{TIMED_PATTERNS[int(j)].name.capitalize()}\t{float(t)!r}\t{float(th)!r}\t{float(nll)!r}\n")
        else:
            fh.write("row\tlogit\tis_p1\n")
            for k, (x, y) in enumerate(zip(report["logits"], report["labels"])):
                fh.write(f"{k}\t{float(x)!r}\t{int(y)}\n")
    write_text(path, body, header)


def _summary(report: dict) -> dict:
    """The JSON-safe part of an evaluation report."""
    return {k: v for k, v in report.items() if k not in ("probs", "labels", "logits", "rows")}


# -- subcommands --------------------------------------------------------------------

def cmd_ingest(args, cfg):
    files = find_benson_files(args.source or cfg.data_dir)
    g = ingest_benson_graph(*files)
    out = args.out or cfg.cache
    if not out:
        raise InputError("no output cache path (use --out)")
    save_cache(g, out)
    s = stats(g)
    print(s.to_json())
    if args.stats:
        write_json(args.stats, dataclasses.asdict(s), cfg.header(command="ingest", source=str(files[0].parent)))
    return 0


def cmd_enumerate(args, cfg):
    g = _graph(args, cfg)
    instances = enumerate_instances(g, cfg.split_config(), policy=cfg.policy)
    if not args.no_balance:
        instances = balance_classes(instances, seed=cfg.master_seed)
    header = cfg.header(command="enumerate", balanced=not args.no_balance, time_units="normalized")
    write_text(args.out, lambda fh: write_instances(instances, fh), header)
    counts = split_counts(instances)
    print({s: {p.name.capitalize(): n for p, n in c.items()} for s, c in counts.items()})
    return 0


def cmd_baseline(args, cfg):
    g = _graph(args, cfg)
    tr, _, te = _splits(_instances(args.instances))
    tr_t, y_tr = instance_arrays(tr)
    te_t, y_te = instance_arrays(te)
    x_tr, x_te = feature_table(g, tr_t), feature_table(g, te_t)
    out = _out_dir(args)
    header = cfg.header(command="baseline")
    write_text(out / "features_test.tsv", lambda fh: write_feature_table(te_t, x_te, fh), header)
    runs, agg = [], {}
    for j, name in enumerate(FEATURE_NAMES):
        aucs = []
        for seed in cfg.seeds:
            head = train_heuristic_head(x_tr[:, j], y_tr, seed=seed, activation="relu")
            probs = head.predict_proba(x_te[:, j])
            aucs.append(auc_1v1(probs, y_te))
            runs.append({"feature": name, "seed": seed, "auc_1v1": aucs[-1],
                         "confusion": confusion_matrix(probs.argmax(1), y_te)})
        agg[name] = mean_std(aucs)
        if args.figures and name == args.figure_feature:
            plotting.confusion_figure(runs[-1]["confusion"], out / f"confusion_{name}.png", f"{name}, seed {seed}")
    write_json(out / "baseline_metrics.json", {"runs": runs, "aggregate": {k: list(v) for k, v in agg.items()}},
               header)
    for name, (m, s) in agg.items():
        print(f"{name}\t{m:.2f} +- {s:.2f}")
    return 0


def cmd_train(args, cfg):
    g = _graph(args, cfg)
    tr, va, te = _splits(_instances(args.instances))
    tcfg = cfg.train_config()
    out = _out_dir(args)
    runs = []
    for seed in cfg.seeds:
        header = cfg.header(command=f"train {args.task}", seed=seed)
        model = HIT(cfg.model_config(args.task, g.time_range), seed=seed)
        res = train(model, g, tr, va, tcfg, seed=seed)
        ckpt = out / f"{args.task}_seed{seed}.pt"
        save_checkpoint(res.model, str(ckpt), extra={"header": header, "seed": seed, "train": dataclasses.asdict(tcfg)})
        report = evaluate(res.model, g, te, tcfg)
        runs.append({"seed": seed, "best_epoch": res.best_epoch, "checkpoint": ckpt.name,
                     "history": res.history, **_summary(report)})
        if args.figures:
            plotting.history_figure(res.history, out / f"{args.task}_seed{seed}_history.png")
            _task_figures(args.task, report, out, f"{args.task}_seed{seed}")
    write_json(out / f"{args.task}_metrics.json", {"runs": runs, "aggregate": _aggregate(args.task, runs)},
               cfg.header(command=f"train {args.task}"))
    print(json.dumps(jsonable(_aggregate(args.task, runs))))
    return 0


def _aggregate(task, runs):
    if task == "q1":
        return {"auc_1v1": list(mean_std([r["auc_1v1"] for r in runs]))}
    if task == "q3":
        return {"auc": list(mean_std([r["auc"] for r in runs]))}
    agg = {}
    for key in ("nll", "mae_log"):
        names = sorted({n for r in runs for n in r[key]})
        agg[key] = {n: list(mean_std([r[key][n] for r in runs if n in r[key]])) for n in names}
    return agg


def _task_figures(task, report, out, stem):
    if task == "q1":
        plotting.confusion_figure(report["confusion"], out / f"{stem}_confusion.png", stem)
    elif task == "q2" and len(report["rows"]["t"]):
        rows = report["rows"]
        plotting.time_figure(rows["t"], rows["t_hat"], rows["pattern"], out / f"{stem}_times.png",
                             [p.name.capitalize() for p in TIMED_PATTERNS], stem)


def _load_model(path):
    try:
        return load_checkpoint(path)
    except (KeyError, RuntimeError, TypeError) as e:
        raise CheckpointError(f"{path}: {e}") from None


def cmd_eval(args, cfg):
    g = _graph(args, cfg)
    _, _, te = _splits(_instances(args.instances))
    model, extra = _load_model(args.checkpoint)
    tcfg = dataclasses.replace(cfg.train_config(), sampler=dataclasses.replace(cfg.sampler(), m=model.config.m))
    report = evaluate(model, g, te, tcfg)
    out = _out_dir(args)
    stem = Path(args.checkpoint).stem
    header = cfg.header(command="eval", checkpoint=args.checkpoint, trained_seed=extra.get("seed", "unknown"))
    write_json(out / f"{stem}_eval.json", _summary(report), header)
    task = model.config.task
    rows = te
    if task == "q3":
        pos, neg = Q3_PAIRS[tcfg.q3_pair]
        rows = [i for i in te if i.label in pos + neg]
    _write_predictions(out / f"{stem}_predictions.tsv", rows, report, header)
    if task == "q1":
        _write_confusion_csv(out / f"{stem}_confusion.csv", report["confusion"], header)
    if args.figures:
        _task_figures(task, report, out, stem)
    print(json.dumps(jsonable(_summary(report))))
    return 0


def cmd_interpret(args, cfg):
    g = _graph(args, cfg)
    _, _, te = _splits(_instances(args.instances))
    model, extra = _load_model(args.checkpoint)
    if model.config.task != "q3":
        raise InputError(f"{args.checkpoint} is a {model.config.task} model; interpret needs q3")
    tcfg = dataclasses.replace(cfg.train_config(), sampler=dataclasses.replace(cfg.sampler(), m=model.config.m))
    reports = rank_categories(model, g, te, tcfg, sample_size=cfg.sample_size, min_support=cfg.min_support,
                              seed=cfg.master_seed)
    header = cfg.header(command="interpret", checkpoint=args.checkpoint, trained_seed=extra.get("seed", "unknown"))
    write_text(args.out, lambda fh: write_category_csv(reports, model.config.m, fh), header)
    if args.figures:
        plotting.category_figure(reports, model.config.m, Path(args.out).with_suffix(".png"), title=tcfg.q3_pair)
    for r in reports[:5]:
        print("\t".join(str(x) for x in r.row(model.config.m)))
    return 0


def cmd_selftest(args, cfg):
    from .suites import CORRUPT_MIN, GRAD_TOL, gradient_suite, sampler_suite, theorem_suite

    ok = True
    for name, r in gradient_suite().items():
        good = r.max_rel_error > CORRUPT_MIN if name == "corrupted" else r.max_rel_error <= GRAD_TOL
        ok &= good
        verdict = ("detected" if name == "corrupted" else "ok") if good else "FAIL"
        print(f"gradient {name:10s} max_rel_error={r.max_rel_error:.3e} {verdict}")
    th = theorem_suite()
    for name, r in th.results.items():
        print(f"theorem  {name:14s} walk={r.max_walk_diff:.1e} de={r.max_de_diff:.1e} {'ok' if r.passed else 'FAIL'}")
    print(f"theorem  negative control rejected={th.control_rejected} differs={not th.control_result.passed}")
    ok &= th.passed
    n, trials = (10_000, 5) if args.quick else (100_000, 20)
    for r in sampler_suite(n=n, trials=trials):
        good = abs(r.total_probability - 1) <= 1e-12 and r.pass_rate() >= 0.95 - 1e-12
        ok &= good
        print(f"sampler  {r.name:12s} total={r.total_probability:.15f} pass_rate={r.pass_rate():.2f} "
              f"{'ok' if good else 'FAIL'}")
    print("selftest", "passed" if ok else "FAILED")
    return 0 if ok else EXIT_FAILED


def cmd_synth(args, cfg):
    from .synthetic import PlantedConfig, planted_dataset

    data = planted_dataset(PlantedConfig(seed=args.seed))
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    write_benson(data.graph, d / "planted")
    print(f"wrote {d / 'planted'}-{{nverts,simplices,times}}.txt; {data.graph.n_edges} hyperedges")
    return 0


# -- argument parsing ----------------------------------------------------------------

def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration (flags override the config file)")
    g.add_argument("--config", help="flat key = value config file")
    for key in CONFIG_KEYS:
        g.add_argument(f"--{key}", dest=key, default=None, metavar="V",
                       type=lambda raw, key=key: parse_value(key, raw))
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    ap = argparse.ArgumentParser(prog="hyperpattern", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[parent], help="three-file text dataset -> binary cache + stats")
    p.add_argument("source", nargs="?", help="dataset directory (default: the data_dir key)")
    p.add_argument("--out", help="cache file to write")
    p.add_argument("--stats", help="also write stats as JSON")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("enumerate", parents=[parent], help="cache -> labeled, balanced instances")
    p.add_argument("--out", required=True)
    p.add_argument("--no-balance", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("baseline", parents=[parent], help="heuristic features, heads and metrics")
    p.add_argument("--instances", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--figures", action="store_true")
    p.add_argument("--figure-feature", default="aa_mean", choices=FEATURE_NAMES)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("train", parents=[parent], help="train one model per seed")
    p.add_argument("task", choices=("q1", "q2", "q3"))
    p.add_argument("--instances", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[parent], help="test metrics and predictions of a checkpoint")
    p.add_argument("--instances", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("interpret", parents=[parent], help="rank walk categories of a q3 checkpoint")
    p.add_argument("--instances", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="category CSV; the figure goes next to it")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_interpret)

    p = sub.add_parser("selftest", parents=[parent], help="gradient, theorem and sampler suites")
    p.add_argument("--quick", action="store_true", help="smaller sampler trials")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("synth", parents=[parent], help="write the planted synthetic dataset as text files")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return ap


def _fail(code: int, kind: str, message: str) -> int:
    print(f"error[{kind}]: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except HypergraphFormatError as e:
        return _fail(EXIT_INPUT, "format", str(e))
    except (ConfigError, InputError, EmptyClassError) as e:
        return _fail(EXIT_INPUT, "input", str(e))
    except FileNotFoundError as e:
        return _fail(EXIT_INPUT, "input", f"{e.filename}: no such file")
    except CheckpointError as e:
        return _fail(EXIT_CHECKPOINT, "checkpoint", str(e))
    except TrainingDivergedError as e:
        return _fail(EXIT_DIVERGED, "diverged", str(e))
    except ValueError as e:
        return _fail(EXIT_INPUT, "value", str(e))


if __name__ == "__main__":
    sys.exit(main())
