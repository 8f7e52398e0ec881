"""Command-line interface: ``riple {generate,train,recommend,profile,evaluate,sweep}``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import PRESETS, ConfigError, load_config
from .dataset import DatasetError, load_dataset
from .engine import MODES
from .evaluation import (SWEEPABLE, compare_algorithms, reports_to_csv, reports_to_json,
                         run_experiment, sweep)
from .factorization import TrainingDivergedError
from .persistence import ModelFileError, load_pipeline, save_pipeline
from .synthetic import generate_cohort, simulate_interactions, write_cohort

logger = logging.getLogger("riple")

MODEL_FILE = "model.json"

# flag name -> config key
_MODEL_FLAGS = {
    "algorithm": "algorithm", "factors": "n_factors", "reg": "reg",
    "learning_rate": "learning_rate", "epochs": "n_epochs", "neighbors": "n_neighbors",
    "kgw": "kgw", "beta": "beta", "cold_start_threshold": "cold_start_threshold",
}
_SYNTH_FLAGS = {
    "users": "n_users", "questions": "n_questions", "answers": "n_answers",
    "topics": "n_topics", "alpha": "alpha", "max_topics": "max_topics_per_question",
}
_EXPERIMENT_FLAGS = {
    "replicates": "replicates", "split": "split", "folds": "folds",
    "cold_start_fraction": "cold_start_fraction", "tune": "tune",
}
_COMMON_FLAGS = {"seed": "seed", "data": "data", "out": "output"}


class UsageError(Exception):
    pass


def _add_common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named hyperparameter preset")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--data", help="directory holding answers.csv, ratings.csv and tags.csv")
    p.add_argument("--out", help="output directory (default ./out)")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="machine-readable output format")
    p.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")


def _add_model(p):
    g = p.add_argument_group("model")
    g.add_argument("--algorithm", choices=("MF", "BMF", "U-AVG", "I-AVG", "U-KNN", "I-KNN"))
    g.add_argument("--factors", type=int, help="latent dimension K")
    g.add_argument("--reg", type=float, help="L2 regularisation")
    g.add_argument("--learning-rate", type=float, help="SGD step size")
    g.add_argument("--epochs", type=int, help="SGD passes over the ratings")
    g.add_argument("--neighbors", type=int, help="neighbourhood size for the KNN models")
    g.add_argument("--kgw", type=float, help="weight of knowledge gaps versus interest")
    g.add_argument("--beta", type=float, help="weight of the learning-profile term")
    g.add_argument("--cold-start-threshold", type=int,
                   help="users with fewer answers get the cohort-mean profile")


def _add_synthetic(p):
    g = p.add_argument_group("synthetic cohort")
    g.add_argument("--users", type=int)
    g.add_argument("--questions", type=int)
    g.add_argument("--answers", type=int)
    g.add_argument("--topics", type=int)
    g.add_argument("--alpha", type=float, help="Dirichlet concentration of the true gaps")
    g.add_argument("--max-topics", type=int, help="maximum topics per question")


def _add_experiment(p):
    g = p.add_argument_group("experiment")
    g.add_argument("--replicates", type=int)
    g.add_argument("--split", choices=("kfold", "ratio"))
    g.add_argument("--folds", type=int)
    g.add_argument("--cold-start-fraction", type=float,
                   help="share of users left with fewer answers than the threshold")
    g.add_argument("--no-tune", dest="tune", action="store_const", const=False,
                   help="skip validation tuning of the regularisation")


def build_parser():
    parser = argparse.ArgumentParser(prog="riple", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("generate", help="write a synthetic cohort as CSV files")
    _add_common(p)
    _add_synthetic(p)

    p = sub.add_parser("train", help="fit the recommender on a dataset")
    _add_common(p)
    _add_model(p)

    p = sub.add_parser("recommend", help="rank questions for one user")
    _add_common(p)
    p.add_argument("--model", help=f"trained model file (default OUT/{MODEL_FILE})")
    p.add_argument("--user", required=True, help="user id as written in the CSV files")
    p.add_argument("--mode", choices=MODES, default="explore")
    p.add_argument("--topics", dest="focus_topics",
                   help="comma-separated topic ids (required for focus mode)")
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--beta", type=float, help="override the trained beta")

    p = sub.add_parser("profile", help="print one user's topic-gap profile")
    _add_common(p)
    p.add_argument("--model", help=f"trained model file (default OUT/{MODEL_FILE})")
    p.add_argument("--user", required=True)

    p = sub.add_parser("evaluate", help="score the recommender on synthetic cohorts")
    _add_common(p)
    _add_model(p)
    _add_synthetic(p)
    _add_experiment(p)
    p.add_argument("--compare", metavar="ALGS",
                   help="comma-separated algorithms to compare by RMSE instead")

    p = sub.add_parser("sweep", help="evaluate across values of one parameter")
    _add_common(p)
    _add_model(p)
    _add_synthetic(p)
    _add_experiment(p)
    p.add_argument("--param", required=True, choices=SWEEPABLE)
    p.add_argument("--values", required=True, help="comma-separated values")
    return parser


def _config(args):
    overrides = {}
    for table in (_COMMON_FLAGS, _MODEL_FLAGS, _SYNTH_FLAGS, _EXPERIMENT_FLAGS):
        for flag, key in table.items():
            if hasattr(args, flag):
                overrides[key] = getattr(args, flag)
    cfg = load_config(args.config, args.preset, overrides)
    logger.info("effective config (sha256 %s): %s", cfg.digest()[:12], cfg.to_json())
    logger.info("seed %d", cfg.seed)
    return cfg


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(directory, command, cfg, outputs, runtime):
    """Record what produced ``outputs``: config, its hash, seed and checksums."""
    directory = Path(directory)
    manifest = {
        "command": command,
        "version": __version__,
        "config": asdict(cfg),
        "config_hash": cfg.digest(),
        "seed": cfg.seed,
        "outputs": {Path(p).name: _sha256(p) for p in outputs},
        "runtime_seconds": round(runtime, 3),
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _load_data(cfg):
    d = Path(cfg.data)
    return load_dataset(d / "answers.csv", d / "ratings.csv", d / "tags.csv")


def _emit(text, stream=None):
    (stream or sys.stdout).write(text)


def _rows_to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: (";".join(v) if isinstance(v, list) else v) for k, v in row.items()})
    return buf.getvalue()


def _synthetic(cfg):
    cohort_seed, answer_seed = (int(s) for s in np.random.SeedSequence(cfg.seed).generate_state(2))
    cohort = generate_cohort(cfg.n_users, cfg.n_questions, cfg.n_topics, cfg.alpha,
                             seed=cohort_seed,
                             max_topics_per_question=cfg.max_topics_per_question)
    return cohort, simulate_interactions(cohort, cfg.n_answers, seed=answer_seed)


def cmd_generate(args, cfg):
    start = time.perf_counter()
    cohort, ds = _synthetic(cfg)
    paths = write_cohort(cohort, ds, cfg.output)
    write_manifest(cfg.output, "generate", cfg, paths, time.perf_counter() - start)
    logger.info("wrote %s", ", ".join(str(p) for p in paths))
    return 0


def cmd_train(args, cfg):
    start = time.perf_counter()
    ds = _load_data(cfg)
    model = cfg.model().fit(ds)
    path = save_pipeline(model, Path(cfg.output) / MODEL_FILE)
    write_manifest(cfg.output, "train", cfg, [path], time.perf_counter() - start)
    fitted = model.integration_.benefit
    summary = {"model": str(path), "n_users": ds.n_users, "n_questions": ds.n_questions,
               "n_answers": ds.n_answers,
               "training_rmse": float(((model.predict(ds.pairs) - fitted) ** 2).mean() ** 0.5),
               "cold_start_users": int(model.profile_.cold_start.sum())}
    _emit(json.dumps(summary, sort_keys=True) + "\n")
    return 0


def _fitted(args, cfg):
    ds = _load_data(cfg)
    path = args.model or Path(cfg.output) / MODEL_FILE
    return load_pipeline(path, ds), ds


def cmd_recommend(args, cfg):
    topics = [t for t in (args.focus_topics or "").split(",") if t]
    if args.mode == "focus" and not topics:
        raise UsageError("focus mode needs --topics")
    if args.top_n < 1:
        raise UsageError("--top-n must be >= 1")
    model, ds = _fitted(args, cfg)
    if args.beta is not None:
        model.set_params(beta=args.beta)
    u = ds.user_index(args.user)
    focus = [ds.topic_index(t) for t in topics] or None
    attempted = set(ds.questions[ds.users == u].tolist())
    rows = [{"question_id": ds.question_label(i), "score": score,
             "tags": [ds.topic_label(t) for t in ds.question_topics(i)],
             "attempted": i in attempted}
            for i, score in model.recommend(u, args.mode, focus, args.top_n)]
    if args.format == "csv":
        _emit(_rows_to_csv(rows, ["question_id", "score", "tags", "attempted"]))
    else:
        _emit(json.dumps(rows, indent=2) + "\n")
    return 0


def cmd_profile(args, cfg):
    model, ds = _fitted(args, cfg)
    u = ds.user_index(args.user)
    row = model.profile_.effective(u)
    out = {"user_id": args.user, "cold_start": bool(model.profile_.cold_start[u]),
           "gaps": {ds.topic_label(t): float(row[t]) for t in range(ds.n_topics)}}
    if args.format == "csv":
        _emit(_rows_to_csv([{"user_id": args.user, "cold_start": out["cold_start"],
                             "topic_id": t, "gap": g} for t, g in out["gaps"].items()],
                           ["user_id", "cold_start", "topic_id", "gap"]))
    else:
        _emit(json.dumps(out, indent=2) + "\n")
    return 0


def _write_report(cfg, command, text, name, start):
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    write_manifest(out, command, cfg, [path], time.perf_counter() - start)
    _emit(text)


def _comparison(args, cfg):
    algorithms = [a for a in args.compare.split(",") if a]
    ds = _load_data(cfg) if args.data else _synthetic(cfg)[1]
    params = {"n_factors": cfg.n_factors, "reg": cfg.reg, "learning_rate": cfg.learning_rate,
              "n_epochs": cfg.n_epochs, "n_neighbors": cfg.n_neighbors,
              "random_state": cfg.seed}
    return compare_algorithms(ds, algorithms, cfg.split_spec(), cfg.kgw, params,
                              cfg.param_grid(), cfg.seed)


def cmd_evaluate(args, cfg):
    start = time.perf_counter()
    if args.compare:
        rows = [r.to_dict() for r in _comparison(args, cfg)]
        if args.format == "csv":
            text = _rows_to_csv(rows, ["algorithm", "rmse_mean", "rmse_sd"])
        else:
            text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
        _write_report(cfg, "evaluate", text, f"comparison.{args.format}", start)
        return 0
    report = run_experiment(cfg.template(), cfg.model(), cfg.split_spec(), cfg.replicates,
                            cfg.seed, cfg.cold_start_fraction, cfg.param_grid())
    text = reports_to_csv([report]) if args.format == "csv" else reports_to_json([report])
    _write_report(cfg, "evaluate", text, f"report.{args.format}", start)
    return 0


def _sweep_values(param, text):
    kind = int if param == "L" else float
    try:
        values = [kind(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values: cannot read {text!r} as {kind.__name__}s") from None
    if not values:
        raise UsageError("--values is empty")
    return values


def cmd_sweep(args, cfg):
    start = time.perf_counter()
    values = _sweep_values(args.param, args.values)
    reports = sweep(args.param, values, cfg.template(), cfg.model(), cfg.split_spec(),
                    cfg.replicates, cfg.seed, cfg.cold_start_fraction, cfg.param_grid())
    text = reports_to_csv(reports) if args.format == "csv" else reports_to_json(reports)
    _write_report(cfg, "sweep", text, f"sweep_{args.param}.{args.format}", start)
    return 0


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "recommend": cmd_recommend,
            "profile": cmd_profile, "evaluate": cmd_evaluate, "sweep": cmd_sweep}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr,
                        force=True)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except (ConfigError, DatasetError, ModelFileError, TrainingDivergedError, KeyError,
            ValueError, OSError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"riple: error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
