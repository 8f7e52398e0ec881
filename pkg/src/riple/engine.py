"""Topic gaps propagated back to questions, blended with predicted benefit,
and the three selection modes (explore, review, focus)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODES = ("explore", "review", "focus")


def propagate_gaps(profiles, T):
    """Question-level gaps ``profiles @ T.T``; untagged questions get 0."""
    return np.asarray(profiles, dtype=np.float64) @ np.asarray(T, dtype=np.float64).T


def output_matrix(r_hat, g_hat, beta):
    """Personalised scores ``r_hat + beta * g_hat``."""
    r_hat = np.asarray(r_hat, dtype=np.float64)
    g_hat = np.asarray(g_hat, dtype=np.float64)
    if r_hat.shape != g_hat.shape:
        raise ValueError(f"shape mismatch: {r_hat.shape} vs {g_hat.shape}")
    if not beta >= 0:
        raise ValueError(f"beta must be >= 0, got {beta!r}")
    return r_hat + beta * g_hat


@dataclass(frozen=True)
class RecommendationOutput:
    r_hat: np.ndarray
    g_hat: np.ndarray
    beta: float

    @property
    def o(self):
        return output_matrix(self.r_hat, self.g_hat, self.beta)


def candidate_mask(ds, u, mode, focus_topics=None):
    """Boolean mask over questions eligible for user ``u`` in ``mode``."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    attempted = np.zeros(ds.n_questions, dtype=bool)
    attempted[ds.questions[ds.users == u]] = True
    if mode == "explore":
        return ~attempted
    if mode == "review":
        return attempted
    if not focus_topics:
        raise ValueError("focus mode needs at least one topic")
    return (ds.tags[:, list(focus_topics)] > 0).any(axis=1)


def rank(scores, candidates, top_n):
    """Indices of the ``top_n`` highest-scoring candidates; ties go to the
    lower index."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    idx = np.flatnonzero(candidates)
    order = np.lexsort((idx, -scores[idx]))
    return idx[order[:top_n]]


def recommend(u, o, ds, mode="explore", focus_topics=None, top_n=10):
    """Ranked question indices for user ``u`` from the score matrix ``o``."""
    o = np.asarray(o)
    return rank(o[u], candidate_mask(ds, u, mode, focus_topics), top_n)


def top_explore(o, ds):
    """Best unattempted question per user (-1 when the user attempted all)."""
    masked = np.array(o, dtype=np.float64, copy=True)
    masked[ds.users, ds.questions] = -np.inf
    best = masked.argmax(axis=1)
    best[np.isneginf(masked[np.arange(masked.shape[0]), best])] = -1
    return best
