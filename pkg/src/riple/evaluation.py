"""Metrics, data splits, synthetic experiments, parameter sweeps and
algorithm comparisons."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import clone

from .integration import benefit_matrix, gap_score, integrate
from .pipeline import ALGORITHMS, RiPLE, make_recommender
from .synthetic import generate_cohort, simulate_interactions

logger = logging.getLogger(__name__)

SWEEPABLE = ("alpha", "L", "beta", "kgw")
#: Candidate values searched on validation data.  Each algorithm is tuned
#: over the keys it actually uses (``reg`` for MF/BMF, ``n_neighbors`` for KNN).
DEFAULT_GRID = {"reg": (0.02, 0.05, 0.1, 0.2, 0.5, 1.0), "n_neighbors": (10, 20, 40, 80)}
_FACTOR_MODELS = ("MF", "BMF")


def rmse(y_true, y_pred):
    """Root mean squared error over paired values."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have the same shape")
    if y_true.size == 0:
        raise ValueError("rmse of an empty set is undefined")
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def topic_accuracy(recommendations, tags, true_gaps, users=None):
    """Fraction of users whose recommended question is tagged with one of their
    largest true-gap topics.

    ``recommendations[u]`` is a question index, or -1 for "no recommendation"
    (such users are skipped).  Returns NaN when no user is evaluated.
    """
    recommendations = np.asarray(recommendations)
    true_gaps = np.asarray(true_gaps, dtype=np.float64)
    tags = np.asarray(tags)
    if users is None:
        users = np.arange(recommendations.size)
    users = np.asarray(users, dtype=np.int64)
    users = users[recommendations[users] >= 0]
    if users.size == 0:
        return float("nan")
    top = true_gaps[users].max(axis=1, keepdims=True)
    weakest = true_gaps[users] >= top - 1e-12
    tagged = tags[recommendations[users]] > 0
    return float(np.mean((weakest & tagged).any(axis=1)))


def kfold_split(n_pairs, k=5, seed=0):
    """Partition ``range(n_pairs)`` into ``k`` shuffled folds.

    Returns a list of ``(train_index, test_index)`` with sorted index arrays;
    fold sizes differ by at most one.
    """
    n = n_pairs if np.isscalar(n_pairs) else len(n_pairs)
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k!r}")
    if n < k:
        raise ValueError(f"cannot split {n} pairs into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    folds = [np.sort(f) for f in np.array_split(perm, k)]
    out = []
    for f in folds:
        train = np.ones(n, dtype=bool)
        train[f] = False
        out.append((np.flatnonzero(train), f))
    return out


def ratio_split(n_pairs, ratios=(0.6, 0.2, 0.2), seed=0):
    """Shuffle and cut ``range(n_pairs)`` into consecutive parts sized by
    ``ratios`` (which must sum to 1)."""
    n = n_pairs if np.isscalar(n_pairs) else len(n_pairs)
    ratios = np.asarray(ratios, dtype=np.float64)
    if np.any(ratios < 0) or not np.isclose(ratios.sum(), 1.0):
        raise ValueError("split ratios must be non-negative and sum to 1")
    perm = np.random.default_rng(seed).permutation(n)
    cuts = np.round(np.cumsum(ratios)[:-1] * n).astype(int)
    return [np.sort(part) for part in np.split(perm, cuts)]


@dataclass(frozen=True)
class SplitSpec:
    """How observed pairs are divided: ``kfold`` (k folds) or ``ratio``
    (train / validation / test fractions)."""

    scheme: str = "kfold"
    k: int = 5
    ratios: tuple = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in ("kfold", "ratio"):
            raise ValueError(f"unknown split scheme {self.scheme!r}")
        if self.scheme == "ratio" and len(self.ratios) != 3:
            raise ValueError("ratio splits need (train, valid, test) fractions")

    def splits(self, n_pairs, seed=None):
        """Yield ``(train, valid, test)`` index arrays; ``valid`` is empty for
        k-fold splits."""
        seed = self.seed if seed is None else seed
        if self.scheme == "kfold":
            empty = np.empty(0, dtype=np.int64)
            return [(tr, empty, te) for tr, te in kfold_split(n_pairs, self.k, seed)]
        return [tuple(ratio_split(n_pairs, self.ratios, seed))]


@dataclass(frozen=True)
class SyntheticTemplate:
    n_users: int = 400
    n_questions: int = 1100
    n_answers: int = 22000
    n_topics: int = 10
    alpha: float = 0.1
    max_topics_per_question: int = 1


def _summary(values):
    values = np.asarray(values, dtype=np.float64)
    values = values[~np.isnan(values)]
    if values.size == 0:
        return None, None
    return float(values.mean()), float(values.std(ddof=1)) if values.size > 1 else 0.0


@dataclass
class EvalReport:
    """Aggregated results of one experiment configuration."""

    param_name: str | None
    param_value: object
    replicates: int
    runs: list = field(default_factory=list)
    runtime: float = 0.0

    def _metric(self, key):
        return _summary([r[key] for r in self.runs])

    @property
    def rmse(self):
        return self._metric("rmse")

    @property
    def accuracy_regular(self):
        return self._metric("accuracy_regular")

    @property
    def accuracy_cold(self):
        return self._metric("accuracy_cold")

    def to_dict(self, include_runtime=False):
        """JSON-ready summary.  Runtime is left out by default so reports of
        identical runs compare byte for byte."""
        out = {"param_name": self.param_name, "param_value": self.param_value,
               "replicates": self.replicates, "n_runs": len(self.runs)}
        for key in ("rmse", "accuracy_regular", "accuracy_cold"):
            mean, sd = self._metric(key)
            out[key] = {"mean": mean, "sd": sd}
        out["runs"] = self.runs
        if include_runtime:
            out["runtime"] = self.runtime
        return out


def _seeds(seed, replicates):
    """Per-replicate integer seeds for (cohort, simulation, split, cold, model)."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(replicates):
        out.append([int(s.generate_state(1)[0]) for s in child.spawn(5)])
    return out


def _cold_start_keep(ds, n_cold, max_kept, rng):
    """Training mask that leaves ``n_cold`` random users with at most
    ``max_kept`` of their answers."""
    keep = np.ones(ds.n_answers, dtype=bool)
    if n_cold == 0:
        return keep
    cold = rng.choice(ds.n_users, size=n_cold, replace=False)
    for u in np.sort(cold):
        idx = np.flatnonzero(ds.users == u)
        kept = rng.integers(0, max_kept + 1)
        keep[rng.permutation(idx)[kept:]] = False
    return keep


def _select_params(model, train_ds, valid_ds, grid):
    """Clone of ``model`` with the ``grid`` combination scoring the lowest
    validation RMSE (first combination wins ties)."""
    grid = _grid_for(model.get_params()["algorithm"], grid)
    if not grid:
        return clone(model)
    keys = sorted(grid)
    best, best_score = None, np.inf
    for combo in itertools.product(*(grid[k] for k in keys)):
        trial = clone(model).set_params(**dict(zip(keys, combo))).fit(train_ds)
        score = rmse(trial.benefit(valid_ds), trial.predict(valid_ds.pairs))
        if score < best_score - 1e-12:
            best, best_score = dict(zip(keys, combo)), score
    return clone(model).set_params(**best)


def _inner_split(ds, train, valid, seed):
    """(tuning-train, tuning-valid) datasets drawn from training data only."""
    if valid.size:
        return ds.subset(train), ds.subset(valid)
    inner_tr, inner_va = ratio_split(train.size, (0.8, 0.2), seed)
    return ds.subset(train[inner_tr]), ds.subset(train[inner_va])


def _evaluate(template, model, split, replicates, seed, cold_start_fraction, betas, grid):
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if not 0 <= cold_start_fraction <= 1:
        raise ValueError("cold_start_fraction must lie in [0, 1]")
    start = time.perf_counter()
    runs = {b: [] for b in betas}
    threshold = model.get_params()["cold_start_threshold"]
    for rep, (s_cohort, s_sim, s_split, s_cold, s_model) in enumerate(_seeds(seed, replicates)):
        cohort = generate_cohort(template.n_users, template.n_questions, template.n_topics,
                                 template.alpha, seed=s_cohort,
                                 max_topics_per_question=template.max_topics_per_question)
        ds = simulate_interactions(cohort, template.n_answers, seed=s_sim)
        n_cold = int(round(cold_start_fraction * ds.n_users))
        keep = _cold_start_keep(ds, n_cold, max(threshold - 1, 0),
                                np.random.default_rng(s_cold))
        for fold, (train, valid, test) in enumerate(split.splits(ds.n_answers, s_split)):
            train, valid = train[keep[train]], valid[keep[valid]]
            base = clone(model).set_params(random_state=s_model)
            chosen = _select_params(base, *_inner_split(ds, train, valid, s_split + fold), grid)
            tuned = sorted(_grid_for(base.get_params()["algorithm"], grid))
            # the validation part rejoins training once parameters are chosen
            train_ds, test_ds = ds.subset(np.union1d(train, valid)), ds.subset(test)
            fitted = chosen.fit(train_ds)
            error = rmse(fitted.benefit(test_ds), fitted.predict(test_ds.pairs))
            cold = fitted.profile_.cold_start
            for b in betas:
                fitted.set_params(beta=b)
                top = fitted.top_recommendations()
                runs[b].append({
                    "replicate": rep, "fold": fold, "rmse": error,
                    "accuracy_regular": topic_accuracy(top, ds.tags, cohort.true_gaps,
                                                       np.flatnonzero(~cold)),
                    "accuracy_cold": topic_accuracy(top, ds.tags, cohort.true_gaps,
                                                    np.flatnonzero(cold)),
                    "n_regular": int((~cold).sum()), "n_cold": int(cold.sum()),
                    "params": {k: chosen.get_params()[k] for k in tuned},
                })
            logger.debug("replicate %d fold %d: rmse %.4f", rep, fold, error)
    elapsed = time.perf_counter() - start
    return {b: (r, elapsed) for b, r in runs.items()}


def run_experiment(template=SyntheticTemplate(), model=None, split=SplitSpec(), replicates=5,
                   seed=0, cold_start_fraction=0.1, param_grid=None):
    """Generate, split, fit and score ``replicates`` synthetic cohorts.

    A ``cold_start_fraction`` of users keep fewer than the cold-start threshold
    of their answers in every training set, so both user groups are present.
    Each fold's RMSE is measured on its held-out pairs, and topic accuracy of
    the top explore-mode recommendation is reported separately for regular and
    cold-start users.

    The ``param_grid`` entries the algorithm uses (default
    :data:`DEFAULT_GRID`, ``{}`` to disable) are chosen by validation RMSE
    inside each training set; test pairs are never used for the choice.
    """
    model = RiPLE() if model is None else model
    grid = DEFAULT_GRID if param_grid is None else param_grid
    beta = model.get_params()["beta"]
    runs, elapsed = _evaluate(template, model, split, replicates, seed,
                              cold_start_fraction, [beta], grid)[beta]
    return EvalReport(param_name=None, param_value=None, replicates=replicates, runs=runs,
                      runtime=elapsed)


def sweep(param_name, values, template=SyntheticTemplate(), model=None, split=SplitSpec(),
          replicates=5, seed=0, cold_start_fraction=0.1, param_grid=None):
    """One :class:`EvalReport` per value of ``param_name``.

    Every value reuses the same seed schedule, so values are compared on
    paired random draws.  Sweeping ``beta`` reuses each fitted model, since
    ``beta`` only enters the final ranking.
    """
    if param_name not in SWEEPABLE:
        raise ValueError(f"cannot sweep {param_name!r}; expected one of {SWEEPABLE}")
    model = RiPLE() if model is None else model
    values = list(values)
    if param_name == "beta":
        grid = DEFAULT_GRID if param_grid is None else param_grid
        results = _evaluate(template, model, split, replicates, seed, cold_start_fraction, values,
                            grid)
        return [EvalReport("beta", v, replicates, *results[v]) for v in values]
    reports = []
    for v in values:
        if param_name == "kgw":
            t, m = template, clone(model).set_params(kgw=v)
        else:
            key = "alpha" if param_name == "alpha" else "n_topics"
            t, m = replace(template, **{key: v}), model
        report = run_experiment(t, m, split, replicates, seed, cold_start_fraction, param_grid)
        report.param_name, report.param_value = param_name, v
        reports.append(report)
    return reports


def pooled_sd(*sds):
    """Root mean square of equally sized groups' standard deviations."""
    sds = np.asarray(sds, dtype=np.float64)
    return float(np.sqrt(np.mean(sds ** 2)))


def reports_to_json(reports):
    """Serialise reports with sorted keys and no runtime, so identical runs
    produce identical text."""
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def reports_to_csv(reports):
    """Plot-ready rows ``param_value,metric,group,mean,sd``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param_value", "metric", "group", "mean", "sd"])
    for r in reports:
        value = "" if r.param_value is None else r.param_value
        for metric, group, key in (("rmse", "all", "rmse"),
                                   ("accuracy", "regular", "accuracy_regular"),
                                   ("accuracy", "cold", "accuracy_cold")):
            mean, sd = r._metric(key)
            w.writerow([value, metric, group, "" if mean is None else repr(mean),
                        "" if sd is None else repr(sd)])
    return buf.getvalue()




def _used_params(algorithm):
    if algorithm in _FACTOR_MODELS:
        return ("n_factors", "reg", "learning_rate", "n_epochs", "random_state")
    return ("n_neighbors",) if algorithm.endswith("KNN") else ()


def _grid_for(algorithm, grid):
    return {k: v for k, v in (grid or {}).items() if k in _used_params(algorithm)}


def _benefit_of(ds, d_bar, kgw):
    return benefit_matrix(gap_score(ds.correct, d_bar[ds.questions]), ds.interest, kgw)


def _fit_score(algorithm, params, train_ds, kgw, eval_sets):
    """Fit ``algorithm`` on ``train_ds``'s benefit; RMSE on each eval set,
    scored with the training average difficulties."""
    integration = integrate(train_ds, kgw)
    model = make_recommender(algorithm, n_users=train_ds.n_users,
                             n_items=train_ds.n_questions, **params)
    model.fit(train_ds.pairs, integration.benefit)
    return [rmse(_benefit_of(d, integration.avg_difficulty, kgw), model.predict(d.pairs))
            for d in eval_sets]


def _tune(algorithm, params, train_ds, valid_ds, kgw, grid):
    best, best_score = dict(params), np.inf
    keys = sorted(grid)
    for combo in itertools.product(*(grid[k] for k in keys)):
        trial = {**params, **dict(zip(keys, combo))}
        (score,) = _fit_score(algorithm, trial, train_ds, kgw, [valid_ds])
        if score < best_score - 1e-12:
            best, best_score = trial, score
    return best


@dataclass
class ComparisonRow:
    algorithm: str
    folds: list
    params: list

    @property
    def mean(self):
        return float(np.mean(self.folds))

    @property
    def sd(self):
        return float(np.std(self.folds, ddof=1)) if len(self.folds) > 1 else 0.0

    def to_dict(self):
        return {"algorithm": self.algorithm, "rmse_mean": self.mean, "rmse_sd": self.sd,
                "folds": self.folds, "params": self.params}


def compare_algorithms(ds, algorithms=tuple(ALGORITHMS), split=SplitSpec(), kgw=0.8,
                       params=None, param_grid=None, seed=0):
    """Test RMSE of each algorithm on identical splits of ``ds``.

    Benefits are recomputed per fold from training data only.  Each algorithm
    gets the ``param_grid`` values it uses (default :data:`DEFAULT_GRID`,
    ``{}`` to disable) with the lowest validation RMSE; k-fold splits carve the
    validation part out of each training fold.
    """
    algorithms = list(algorithms)
    if not algorithms:
        raise ValueError("need at least one algorithm")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    params = dict(params or {})
    grid = DEFAULT_GRID if param_grid is None else param_grid
    rows = {a: ComparisonRow(a, [], []) for a in algorithms}
    for fold, (train, valid, test) in enumerate(split.splits(ds.n_answers, seed)):
        inner_train, inner_valid = _inner_split(ds, train, valid, seed + fold)
        full_train, test_ds = ds.subset(np.union1d(train, valid)), ds.subset(test)
        for a in algorithms:
            chosen = dict(params)
            if _grid_for(a, grid):
                chosen = _tune(a, params, inner_train, inner_valid, kgw, _grid_for(a, grid))
            (score,) = _fit_score(a, chosen, full_train, kgw, [test_ds])
            rows[a].folds.append(score)
            rows[a].params.append({k: chosen[k] for k in sorted(chosen) if k in _used_params(a)})
            logger.debug("fold %d %s: rmse %.4f", fold, a, score)
    return [rows[a] for a in algorithms]
