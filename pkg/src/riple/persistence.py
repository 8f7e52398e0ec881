"""Versioned JSON files for fitted rating predictors and pipelines."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from sklearn.utils.validation import check_is_fitted

from .factorization import BiasedMatrixFactorization, MatrixFactorization
from .integration import integrate
from .pipeline import ALGORITHMS, RiPLE

FORMAT = "riple-model"
VERSION = 1

_NAMES = {cls: name for name, cls in ALGORITHMS.items()}


class ModelFileError(ValueError):
    pass


def dataset_fingerprint(ds):
    """SHA-256 over the dataset's dimensions, identifiers and answer arrays."""
    h = hashlib.sha256()
    h.update(json.dumps([ds.user_ids, ds.question_ids, ds.topic_ids]).encode())
    for arr in (ds.users, ds.questions, ds.correct, ds.interest, ds.difficulty, ds.tags):
        a = np.ascontiguousarray(arr)
        h.update(str(a.dtype).encode() + str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def _array(a):
    return np.asarray(a).tolist()


def model_state(model):
    """JSON-ready description of a fitted rating predictor."""
    name = _NAMES.get(type(model))
    if name is None:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    state = {"algorithm": name, "params": model.get_params()}
    if isinstance(model, MatrixFactorization):
        check_is_fitted(model, "item_factors_")
        state["n_users"] = model.n_users_
        state["n_items"] = model.n_items_
        state["item_means"] = _array(model.item_means_)
        state["user_factors"] = _array(model.user_factors_)
        state["item_factors"] = _array(model.item_factors_)
        if isinstance(model, BiasedMatrixFactorization):
            state["global_mean"] = model.global_mean_
            state["user_bias"] = _array(model.user_bias_)
            state["item_bias"] = _array(model.item_bias_)
    else:
        # neighbourhood and average models are cheap to refit exactly
        check_is_fitted(model, "global_mean_")
        state["n_users"] = model.n_users_
        state["n_items"] = model.n_items_
        state["train_pairs"] = _array(model.train_pairs_)
        state["train_values"] = _array(model.train_values_)
    return state


def model_from_state(state):
    try:
        cls = ALGORITHMS[state["algorithm"]]
        model = cls(**state["params"])
        if issubclass(cls, MatrixFactorization):
            K = int(state["params"]["n_factors"])
            model.n_users_ = int(state["n_users"])
            model.n_items_ = int(state["n_items"])
            model.item_means_ = np.asarray(state["item_means"], dtype=np.float64)
            model.user_factors_ = np.asarray(state["user_factors"], dtype=np.float64).reshape(
                model.n_users_, K)
            model.item_factors_ = np.asarray(state["item_factors"], dtype=np.float64).reshape(
                model.n_items_, K)
            model.objective_history_ = np.empty(0)
            if cls is BiasedMatrixFactorization:
                model.global_mean_ = float(state["global_mean"])
                model.user_bias_ = np.asarray(state["user_bias"], dtype=np.float64)
                model.item_bias_ = np.asarray(state["item_bias"], dtype=np.float64)
        else:
            model.set_params(n_users=int(state["n_users"]), n_items=int(state["n_items"]))
            pairs = np.asarray(state["train_pairs"], dtype=np.int64).reshape(-1, 2)
            model.fit(pairs, np.asarray(state["train_values"], dtype=np.float64))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"malformed model state: {exc}") from exc
    return model


def _write(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _read(path, kind):
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: not a JSON model file ({exc})") from exc
    if payload.get("format") != FORMAT or payload.get("kind") != kind:
        raise ModelFileError(f"{path}: not a {kind} file")
    if payload.get("version") != VERSION:
        raise ModelFileError(f"{path}: unsupported version {payload.get('version')!r}")
    return payload


def save_model(model, path):
    """Write a fitted rating predictor; floats keep full precision."""
    return _write(path, {"format": FORMAT, "kind": "recommender", "version": VERSION,
                         "state": model_state(model)})


def load_model(path):
    return model_from_state(_read(path, "recommender")["state"])


def save_pipeline(pipeline, path):
    """Write a fitted :class:`RiPLE`.  The training data is not stored; a
    fingerprint ties the file to it instead."""
    check_is_fitted(pipeline, "recommender_")
    return _write(path, {
        "format": FORMAT, "kind": "pipeline", "version": VERSION,
        "params": pipeline.get_params(),
        "dataset": dataset_fingerprint(pipeline.dataset_),
        "recommender": model_state(pipeline.recommender_),
    })


def load_pipeline(path, ds):
    """Rebuild a fitted :class:`RiPLE` from ``path`` and its training data ``ds``."""
    payload = _read(path, "pipeline")
    if payload["dataset"] != dataset_fingerprint(ds):
        raise ModelFileError(f"{path}: model was trained on a different dataset")
    pipeline = RiPLE(**payload["params"])
    recommender = model_from_state(payload["recommender"])
    return pipeline._finish(ds, integrate(ds, pipeline.kgw), recommender)

