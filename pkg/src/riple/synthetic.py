"""Synthetic cohorts with known topic gaps and 2PL item-response answering."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit, ndtr

from ._validation import check_positive_int
from .dataset import (DIFFICULTY_LEVELS, INTEREST_LEVELS, InteractionDataset, export_dataset,
                      tag_matrix)

DIFFICULTY_NOISE_SD = 0.1
MIN_DISCRIMINATION = 0.2


@dataclass(frozen=True, eq=False)
class SyntheticCohort:
    """Ground truth for a simulated class.

    ``true_gaps`` rows are probability vectors over topics; a large entry is a
    weak topic.  ``difficulty`` and ``discrimination`` are IRT item parameters.
    """

    true_gaps: np.ndarray
    question_topics: tuple
    difficulty: np.ndarray
    discrimination: np.ndarray
    alpha: float
    seed: int

    @property
    def n_users(self):
        return self.true_gaps.shape[0]

    @property
    def n_topics(self):
        return self.true_gaps.shape[1]

    @property
    def n_questions(self):
        return len(self.question_topics)

    def tags(self):
        return tag_matrix(((q, t) for q, ts in enumerate(self.question_topics) for t in ts),
                          self.n_questions, self.n_topics)

    def weakest_topics(self, tol=1e-12):
        """Per user, the set of topics attaining the maximum true gap."""
        top = self.true_gaps.max(axis=1, keepdims=True)
        return [np.flatnonzero(row) for row in self.true_gaps >= top - tol]


def _streams(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def generate_cohort(n_users, n_questions, n_topics, alpha, seed=0, max_topics_per_question=1):
    """Draw gap vectors ~ Dirichlet(alpha) and questions with IRT parameters.

    Each question gets between 1 and ``max_topics_per_question`` distinct
    topics chosen uniformly; difficulty ~ N(0, 1); discrimination ~ N(1, 0.3)
    truncated below at 0.2.  Gaps, topics and item parameters come from
    separate random streams, so changing one dimension leaves the others'
    draws intact where possible.
    """
    n_users = check_positive_int("n_users", n_users)
    n_questions = check_positive_int("n_questions", n_questions)
    n_topics = check_positive_int("n_topics", n_topics)
    max_topics = check_positive_int("max_topics_per_question", max_topics_per_question)
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha!r}")
    if max_topics > n_topics:
        raise ValueError("max_topics_per_question cannot exceed n_topics")
    gap_rng, topic_rng, item_rng = _streams(seed, 3)

    gaps = gap_rng.dirichlet(np.full(n_topics, float(alpha)), size=n_users)
    bad = ~np.isfinite(gaps).all(axis=1)
    if bad.any():  # pragma: no cover - guards extreme alpha underflow
        gaps[bad] = np.eye(n_topics)[gap_rng.integers(n_topics, size=bad.sum())]

    counts = topic_rng.integers(1, max_topics + 1, size=n_questions)
    topics = tuple(tuple(sorted(int(t) for t in topic_rng.choice(n_topics, size=g, replace=False)))
                   for g in counts)

    difficulty = item_rng.normal(0.0, 1.0, size=n_questions)
    discrimination = np.maximum(item_rng.normal(1.0, 0.3, size=n_questions), MIN_DISCRIMINATION)
    return SyntheticCohort(true_gaps=gaps, question_topics=topics, difficulty=difficulty,
                           discrimination=discrimination, alpha=float(alpha), seed=seed)


def irt_probability(theta, a, b):
    """Two-parameter logistic probability of a correct answer."""
    return expit(np.multiply(a, np.subtract(theta, b)))


def user_theta(gap_row, tagged_topics):
    """Competency on a question: ``1 - L * mean(gap over its topics)``.

    Uniform gaps give 0; a topic holding the whole gap gives ``1 - L``.
    """
    tagged_topics = list(tagged_topics)
    if not tagged_topics:
        raise ValueError("question has no topics")
    gap_row = np.asarray(gap_row, dtype=np.float64)
    return 1.0 - gap_row.size * float(gap_row[tagged_topics].mean())


def simulate_interactions(cohort, n_answers, seed=0, quantize=True):
    """Sample answered pairs, correctness and ratings for ``cohort``.

    ``n_answers`` distinct pairs are drawn uniformly.  Correctness follows the
    2PL model; expressed difficulty is ``Phi(b) + N(0, 0.1)`` clipped to
    ``[0, 1]``; interest is uniform.  With ``quantize`` the ratings are snapped
    to the 0..2 and 0..5 scales of the CSV format (interest uniform over the
    six levels), so the dataset survives an export/load round trip unchanged.
    """
    N, M = cohort.n_users, cohort.n_questions
    if not 0 <= n_answers <= N * M:
        raise ValueError(f"n_answers must lie in [0, {N * M}], got {n_answers}")
    pair_rng, answer_rng, rating_rng = _streams(seed, 3)
    flat = np.sort(pair_rng.choice(N * M, size=n_answers, replace=False))
    users, questions = np.divmod(flat, M)

    tags = cohort.tags()
    # tag rows hold 1/g per topic, so this is the mean gap over each question's topics
    mean_gap = np.einsum("nl,nl->n", cohort.true_gaps[users], tags[questions])
    theta = 1.0 - cohort.n_topics * mean_gap
    p = irt_probability(theta, cohort.discrimination[questions], cohort.difficulty[questions])
    correct = (answer_rng.random(n_answers) < p).astype(np.int8)

    difficulty = np.clip(ndtr(cohort.difficulty[questions])
                         + rating_rng.normal(0.0, DIFFICULTY_NOISE_SD, size=n_answers), 0.0, 1.0)
    if quantize:
        difficulty = np.round(difficulty * DIFFICULTY_LEVELS) / DIFFICULTY_LEVELS
        interest = rating_rng.integers(0, INTEREST_LEVELS + 1, size=n_answers) / INTEREST_LEVELS
    else:
        interest = rating_rng.random(n_answers)

    return InteractionDataset(
        users=users, questions=questions, correct=correct, interest=interest,
        difficulty=difficulty, tags=tags, n_users=N,
        user_ids=[f"u{k}" for k in range(N)], question_ids=[f"q{k}" for k in range(M)],
        topic_ids=[f"t{k}" for k in range(cohort.n_topics)],
    )


def write_cohort(cohort, ds, directory):
    """Export ``ds`` as ingestion CSVs plus ``ground_truth.csv`` and
    ``question_params.csv``.  Returns the written paths."""
    directory = Path(directory)
    paths = list(export_dataset(ds, directory))
    truth = directory / "ground_truth.csv"
    with truth.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "topic_id", "true_gap"])
        for u in range(cohort.n_users):
            for t in range(cohort.n_topics):
                w.writerow([ds.user_label(u), ds.topic_label(t), repr(float(cohort.true_gaps[u, t]))])
    params = directory / "question_params.csv"
    with params.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["question_id", "b", "a", "topic_ids"])
        for q in range(cohort.n_questions):
            w.writerow([ds.question_label(q), repr(float(cohort.difficulty[q])),
                        repr(float(cohort.discrimination[q])),
                        ";".join(ds.topic_label(t) for t in cohort.question_topics[q])])
    return paths + [truth, params]


def read_ground_truth(path, ds):
    """Load ``ground_truth.csv`` into an ``n_users x n_topics`` array aligned
    with ``ds``'s indices.  Users absent from ``ds`` are ignored."""
    gaps = np.full((ds.n_users, ds.n_topics), np.nan)
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            try:
                u = ds.user_index(row["user_id"])
            except KeyError:
                continue
            gaps[u, ds.topic_index(row["topic_id"])] = float(row["true_gap"])
    return gaps
