"""User x topic learning profiles and the cohort-mean cold-start fallback."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import attempt_mask

DEFAULT_COLD_START_THRESHOLD = 3


def topic_counts(S, T):
    """Weighted number of attempted questions per user and topic (``S @ T``)."""
    return np.asarray(S @ np.asarray(T, dtype=np.float64))


def compute_profile(G, T, C):
    """Count-normalised topic gaps ``(G @ T) / C``; cells with no attempts are 0."""
    GT = np.asarray(G @ np.asarray(T, dtype=np.float64))
    C = np.asarray(C, dtype=np.float64)
    if GT.shape != C.shape:
        raise ValueError(f"G @ T has shape {GT.shape} but counts have shape {C.shape}")
    lp = np.zeros_like(GT)
    np.divide(GT, C, out=lp, where=C > 0)
    return lp


def cohort_mean(lp):
    """Mean profile over all users, zero rows included."""
    lp = np.asarray(lp, dtype=np.float64)
    if lp.ndim != 2 or lp.shape[0] == 0:
        raise ValueError("cohort mean needs at least one user")
    return lp.mean(axis=0)


def effective_profile(u, lp, lp_mean, attempts, threshold=DEFAULT_COLD_START_THRESHOLD):
    """Profile row used for user ``u``: the cohort mean when the user has
    fewer than ``threshold`` attempts, otherwise their own row."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return np.asarray(lp_mean) if attempts < threshold else np.asarray(lp)[u]


@dataclass(frozen=True)
class LearningProfile:
    lp: np.ndarray
    counts: np.ndarray
    cohort_mean: np.ndarray
    attempts: np.ndarray
    cold_start_threshold: int = DEFAULT_COLD_START_THRESHOLD

    @property
    def cold_start(self):
        """Boolean mask of users below the attempt threshold."""
        return self.attempts < self.cold_start_threshold

    def effective(self, u):
        return effective_profile(u, self.lp, self.cohort_mean, self.attempts[u],
                                 self.cold_start_threshold)

    def effective_matrix(self):
        out = self.lp.copy()
        out[self.cold_start] = self.cohort_mean
        return out


def build_profile(ds, gaps, threshold=DEFAULT_COLD_START_THRESHOLD):
    """Learning profile of every user from per-pair ``gaps`` aligned with ``ds``."""
    counts = topic_counts(attempt_mask(ds), ds.tags)
    lp = compute_profile(ds.sparse(gaps), ds.tags, counts)
    return LearningProfile(lp=lp, counts=counts, cohort_mean=cohort_mean(lp),
                           attempts=ds.attempts_per_user(), cold_start_threshold=int(threshold))
