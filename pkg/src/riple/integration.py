"""Knowledge gaps from answers and difficulty, blended with interest into benefit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_unit_interval

DEFAULT_DIFFICULTY = 0.5


@dataclass(frozen=True)
class GapAndBenefit:
    """Per-pair gaps and benefits, aligned with a dataset's answered pairs."""

    avg_difficulty: np.ndarray
    gaps: np.ndarray
    benefit: np.ndarray
    kgw: float


def avg_difficulty(ds, default=DEFAULT_DIFFICULTY):
    """Mean expressed difficulty per question.

    Questions nobody rated fall back to ``default`` (the neutral midpoint).
    """
    rated = ~np.isnan(ds.difficulty)
    q = ds.questions[rated]
    totals = np.bincount(q, weights=ds.difficulty[rated], minlength=ds.n_questions)
    counts = np.bincount(q, minlength=ds.n_questions)
    out = np.full(ds.n_questions, float(default))
    np.divide(totals, counts, out=out, where=counts > 0)
    return out


def gap_score(a, d_bar):
    """Knowledge-gap score of an answer with correctness ``a`` on a question of
    average difficulty ``d_bar``.

    Incorrect answers score ``0.5 / (1 + d_bar)`` (larger for easy questions);
    correct answers score ``-0.5 / (2 - d_bar)`` (more negative for hard ones).
    Works elementwise on arrays.
    """
    a = np.asarray(a, dtype=np.float64)
    d_bar = np.asarray(d_bar, dtype=np.float64)
    out = (1 - a) * (0.5 - a) / (1 + d_bar) + a * (0.5 - a) / (2 - d_bar)
    return out if out.ndim else float(out)


def knowledge_gap_matrix(ds, d_bar):
    """Gap score of every answered pair, aligned with ``ds.pairs``."""
    d_bar = np.asarray(d_bar, dtype=np.float64)
    if d_bar.shape != (ds.n_questions,):
        raise ValueError(f"d_bar must have length {ds.n_questions}")
    return gap_score(ds.correct, d_bar[ds.questions])


def benefit_matrix(gaps, interest, kgw):
    """Blend gaps and interest: ``kgw * g + (1 - kgw) * p``.

    An unexpressed interest (``NaN``) counts as 0, so the result is defined on
    exactly the same pairs as ``gaps``.
    """
    kgw = check_unit_interval("kgw", kgw)
    gaps = np.asarray(gaps, dtype=np.float64)
    interest = np.nan_to_num(np.asarray(interest, dtype=np.float64), nan=0.0)
    if gaps.shape != interest.shape:
        raise ValueError("gaps and interest must align")
    return kgw * gaps + (1 - kgw) * interest


def integrate(ds, kgw, d_bar=None):
    """Run the full integration step, optionally with a precomputed ``d_bar``."""
    if d_bar is None:
        d_bar = avg_difficulty(ds)
    gaps = knowledge_gap_matrix(ds, d_bar)
    return GapAndBenefit(avg_difficulty=np.asarray(d_bar), gaps=gaps,
                         benefit=benefit_matrix(gaps, ds.interest, kgw), kgw=float(kgw))
