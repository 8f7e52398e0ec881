"""Interaction data model: answers, interest and difficulty ratings, topic tags.

Ratings are held as parallel arrays over the answered ``(user, question)``
pairs, with ``NaN`` marking an unexpressed rating.  Keeping the pairs explicit
(rather than relying on sparse-matrix zeros) means an incorrect answer or a
zero interest rating is never confused with "not attempted".
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

INTEREST_LEVELS = 5
DIFFICULTY_LEVELS = 2

ANSWERS_HEADER = ["user_id", "question_id", "correct"]
RATINGS_HEADER = ["user_id", "question_id", "interest", "difficulty"]
TAGS_HEADER = ["question_id", "topic_id"]


class DatasetError(ValueError):
    """Base class for ingestion and validation failures."""


class ParseError(DatasetError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class ValidationError(DatasetError):
    pass


@dataclass(frozen=True, eq=False)
class InteractionDataset:
    """Answered pairs with their correctness and optional ratings, plus tags.

    Parameters
    ----------
    users, questions : array of int
        Indices of each answered pair.
    correct : array of {0, 1}
    interest, difficulty : array of float
        Scaled ratings in ``[0, 1]``; ``NaN`` where the user expressed none.
    tags : ndarray of shape (n_questions, n_topics)
        Row ``i`` holds ``1/g`` on each of the ``g`` topics of question ``i``.
    n_users : int
    user_ids, question_ids, topic_ids : tuple of str, optional
        External identifiers, one per dense index.
    """

    users: np.ndarray
    questions: np.ndarray
    correct: np.ndarray
    interest: np.ndarray
    difficulty: np.ndarray
    tags: np.ndarray
    n_users: int
    user_ids: tuple | None = None
    question_ids: tuple | None = None
    topic_ids: tuple | None = None
    _question_topics: list = field(default=None, init=False, repr=False)

    def __post_init__(self):
        users = np.asarray(self.users, dtype=np.int64).ravel()
        questions = np.asarray(self.questions, dtype=np.int64).ravel()
        correct = np.asarray(self.correct).ravel()
        interest = np.asarray(self.interest, dtype=np.float64).ravel()
        difficulty = np.asarray(self.difficulty, dtype=np.float64).ravel()
        tags = np.array(self.tags, dtype=np.float64, ndmin=2)
        n = users.size
        if not (questions.size == correct.size == interest.size == difficulty.size == n):
            raise ValidationError("answer, interest and difficulty arrays must have equal length")
        n_users = int(self.n_users)
        n_questions, n_topics = tags.shape
        if n and (users.min() < 0 or users.max() >= n_users):
            raise ValidationError(f"user index out of range for n_users={n_users}")
        if n and (questions.min() < 0 or questions.max() >= n_questions):
            raise ValidationError(f"question index out of range for n_questions={n_questions}")
        if not np.all((correct == 0) | (correct == 1)):
            raise ValidationError("every answer must be exactly 0 or 1")
        for name, values in (("interest", interest), ("difficulty", difficulty)):
            present = values[~np.isnan(values)]
            if np.any((present < 0) | (present > 1)):
                raise ValidationError(f"{name} ratings must lie in [0, 1]")
        _check_tag_rows(tags)

        order = np.lexsort((questions, users))
        users, questions = users[order], questions[order]
        if n > 1:
            dup = (np.diff(users) == 0) & (np.diff(questions) == 0)
            if dup.any():
                k = int(np.argmax(dup))
                raise ValidationError(f"duplicate answer for pair ({users[k]}, {questions[k]})")
        for name, ids, size in (("user_ids", self.user_ids, n_users),
                                ("question_ids", self.question_ids, n_questions),
                                ("topic_ids", self.topic_ids, n_topics)):
            if ids is not None:
                ids = tuple(str(x) for x in ids)
                if len(ids) != size:
                    raise ValidationError(f"{name} has {len(ids)} entries, expected {size}")
                if len(set(ids)) != size:
                    raise ValidationError(f"{name} contains duplicates")
                object.__setattr__(self, name, ids)

        for name, value in (("users", users), ("questions", questions),
                            ("correct", correct[order].astype(np.int8)),
                            ("interest", interest[order]), ("difficulty", difficulty[order]),
                            ("tags", tags)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "n_users", n_users)

    @property
    def n_questions(self):
        return self.tags.shape[0]

    @property
    def n_topics(self):
        return self.tags.shape[1]

    @property
    def n_answers(self):
        return self.users.size

    @property
    def shape(self):
        return self.n_users, self.n_questions

    @property
    def pairs(self):
        """``(n_answers, 2)`` array of ``(user, question)`` indices."""
        return np.column_stack((self.users, self.questions))

    def attempts_per_user(self):
        return np.bincount(self.users, minlength=self.n_users)

    def attempts_per_question(self):
        return np.bincount(self.questions, minlength=self.n_questions)

    def sparse(self, values):
        """Scatter per-pair ``values`` into an ``n_users x n_questions`` CSR matrix."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n_answers,):
            raise ValueError("values must align with the answered pairs")
        return sp.csr_matrix((values, (self.users, self.questions)), shape=self.shape)

    def subset(self, index):
        """Dataset restricted to the answered pairs selected by ``index``.

        Dimensions, tags and identifiers are kept, so users or questions that
        lose all their answers remain addressable.
        """
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        return InteractionDataset(
            users=self.users[index], questions=self.questions[index],
            correct=self.correct[index], interest=self.interest[index],
            difficulty=self.difficulty[index], tags=self.tags, n_users=self.n_users,
            user_ids=self.user_ids, question_ids=self.question_ids, topic_ids=self.topic_ids,
        )

    def question_topics(self, question):
        if self._question_topics is None:
            object.__setattr__(self, "_question_topics",
                               [np.flatnonzero(row) for row in self.tags])
        return self._question_topics[question]

    def untagged_questions(self):
        return np.flatnonzero(~self.tags.any(axis=1))

    def user_index(self, user_id):
        return _lookup(self.user_ids, user_id, "user")

    def question_index(self, question_id):
        return _lookup(self.question_ids, question_id, "question")

    def topic_index(self, topic_id):
        return _lookup(self.topic_ids, topic_id, "topic")

    def user_label(self, u):
        return self.user_ids[u] if self.user_ids is not None else str(u)

    def question_label(self, i):
        return self.question_ids[i] if self.question_ids is not None else str(i)

    def topic_label(self, j):
        return self.topic_ids[j] if self.topic_ids is not None else str(j)


def _lookup(ids, key, kind):
    key = str(key)
    if ids is None:
        if key.isdigit():
            return int(key)
        raise KeyError(f"unknown {kind} id {key!r}")
    try:
        return ids.index(key)
    except ValueError:
        raise KeyError(f"unknown {kind} id {key!r}") from None


def _check_tag_rows(tags):
    if np.any(tags < 0) or not np.all(np.isfinite(tags)):
        raise ValidationError("tag weights must be finite and non-negative")
    g = np.count_nonzero(tags, axis=1)
    tagged = g > 0
    expected = np.zeros_like(tags)
    expected[tagged] = (tags[tagged] > 0) / g[tagged, None]
    if not np.allclose(tags, expected, rtol=0, atol=1e-12):
        raise ValidationError("each tagged question row must hold 1/g on its g topics")


def tag_matrix(assignments, n_questions, n_topics):
    """Build the question x topic weight matrix from ``(question, topic)`` pairs."""
    tags = np.zeros((n_questions, n_topics))
    for q, t in assignments:
        tags[q, t] = 1.0
    g = tags.sum(axis=1, keepdims=True)
    np.divide(tags, g, out=tags, where=g > 0)
    return tags


def attempt_mask(ds):
    """Indicator matrix with a 1 for every attempted ``(user, question)`` pair."""
    return ds.sparse(np.ones(ds.n_answers))


def validation_report(ds):
    """Non-fatal observations about a dataset (untagged questions, idle users)."""
    untagged = ds.untagged_questions()
    idle = np.flatnonzero(ds.attempts_per_user() == 0)
    return {
        "n_users": ds.n_users,
        "n_questions": ds.n_questions,
        "n_topics": ds.n_topics,
        "n_answers": ds.n_answers,
        "untagged_questions": [ds.question_label(i) for i in untagged],
        "users_without_answers": [ds.user_label(u) for u in idle],
        "interest_ratings": int(np.count_nonzero(~np.isnan(ds.interest))),
        "difficulty_ratings": int(np.count_nonzero(~np.isnan(ds.difficulty))),
    }


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _natural_key(s):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", s)]


def _vocabulary(ids, size=None, kind="id"):
    """Map external ids to dense indices.

    All-numeric ids are used as indices directly (dimension ``max + 1`` unless
    ``size`` is given); any other ids are numbered in natural sort order.
    """
    ids = set(ids)
    if ids and all(x.isdigit() for x in ids):
        top = max(int(x) for x in ids) + 1
        if size is None:
            size = top
        elif size < top:
            raise ValidationError(f"{kind} id {top - 1} exceeds the declared count {size}")
        return tuple(str(k) for k in range(size))
    if size is not None and not ids:
        return tuple(str(k) for k in range(size))
    if size is not None:
        raise ValidationError(f"a {kind} count can only be declared for integer ids")
    return tuple(sorted(ids, key=_natural_key))


def _read_rows(path, header):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != header:
            raise ParseError(path, 1, f"expected header {','.join(header)}")
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(path, reader.line_num,
                                 f"expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, [c.strip() for c in row]


def _parse_level(path, line, text, name, top, blank_ok):
    if text == "":
        if blank_ok:
            return None
        raise ParseError(path, line, f"missing {name}")
    try:
        value = int(text)
    except ValueError:
        raise ParseError(path, line, f"{name} {text!r} is not an integer") from None
    if not 0 <= value <= top:
        raise ValidationError(f"{path}:{line}: {name} {value} outside 0..{top}")
    return value


def load_dataset(answers_file, ratings_file, tags_file, *,
                 n_users=None, n_questions=None, n_topics=None):
    """Read the three CSV inputs into an :class:`InteractionDataset`.

    Raw interest (0..5) and difficulty (0..2) levels are rescaled to
    ``[0, 1]``; tag rows are normalised to ``1/g``.
    """
    answers = {}
    for line, (uid, qid, text) in _read_rows(answers_file, ANSWERS_HEADER):
        if not uid or not qid:
            raise ParseError(answers_file, line, "blank user_id or question_id")
        correct = _parse_level(answers_file, line, text, "correct", 1, blank_ok=False)
        if (uid, qid) in answers:
            raise ValidationError(f"{answers_file}:{line}: duplicate answer for ({uid}, {qid})")
        answers[uid, qid] = correct

    ratings = {}
    for line, (uid, qid, interest, difficulty) in _read_rows(ratings_file, RATINGS_HEADER):
        if (uid, qid) not in answers:
            raise ValidationError(
                f"{ratings_file}:{line}: rating for ({uid}, {qid}) without a matching answer")
        if (uid, qid) in ratings:
            raise ValidationError(f"{ratings_file}:{line}: duplicate rating for ({uid}, {qid})")
        p = _parse_level(ratings_file, line, interest, "interest", INTEREST_LEVELS, blank_ok=True)
        d = _parse_level(ratings_file, line, difficulty, "difficulty", DIFFICULTY_LEVELS,
                         blank_ok=True)
        ratings[uid, qid] = (
            np.nan if p is None else p / INTEREST_LEVELS,
            np.nan if d is None else d / DIFFICULTY_LEVELS,
        )

    assignments = []
    seen = set()
    for line, (qid, tid) in _read_rows(tags_file, TAGS_HEADER):
        if not qid or not tid:
            raise ParseError(tags_file, line, "blank question_id or topic_id")
        if (qid, tid) in seen:
            raise ValidationError(f"{tags_file}:{line}: duplicate tag ({qid}, {tid})")
        seen.add((qid, tid))
        assignments.append((qid, tid))

    user_ids = _vocabulary((u for u, _ in answers), n_users, "user")
    question_ids = _vocabulary({q for _, q in answers} | {q for q, _ in assignments},
                               n_questions, "question")
    topic_ids = _vocabulary((t for _, t in assignments), n_topics, "topic")
    u_index = {x: k for k, x in enumerate(user_ids)}
    q_index = {x: k for k, x in enumerate(question_ids)}
    t_index = {x: k for k, x in enumerate(topic_ids)}

    keys = list(answers)
    scaled = [ratings.get(key, (np.nan, np.nan)) for key in keys]
    ds = InteractionDataset(
        users=[u_index[u] for u, _ in keys],
        questions=[q_index[q] for _, q in keys],
        correct=[answers[key] for key in keys],
        interest=[p for p, _ in scaled],
        difficulty=[d for _, d in scaled],
        tags=tag_matrix(((q_index[q], t_index[t]) for q, t in assignments),
                        len(question_ids), len(topic_ids)),
        n_users=len(user_ids),
        user_ids=user_ids, question_ids=question_ids, topic_ids=topic_ids,
    )
    untagged = ds.untagged_questions()
    if untagged.size:
        logger.warning("%d question(s) carry no topic tag and will not inform profiles",
                       untagged.size)
    return ds


def _level(value, levels):
    raw = value * levels
    rounded = round(raw)
    if abs(raw - rounded) > 1e-9:
        raise ValidationError(f"rating {value} is not representable on the 0..{levels} scale")
    return str(int(rounded))


def export_dataset(ds, directory):
    """Write ``answers.csv``, ``ratings.csv`` and ``tags.csv`` into ``directory``.

    Returns the three written paths.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = directory / "answers.csv", directory / "ratings.csv", directory / "tags.csv"
    with paths[0].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ANSWERS_HEADER)
        for u, q, a in zip(ds.users, ds.questions, ds.correct):
            w.writerow([ds.user_label(u), ds.question_label(q), int(a)])
    with paths[1].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATINGS_HEADER)
        for u, q, p, d in zip(ds.users, ds.questions, ds.interest, ds.difficulty):
            if np.isnan(p) and np.isnan(d):
                continue
            w.writerow([ds.user_label(u), ds.question_label(q),
                        "" if np.isnan(p) else _level(p, INTEREST_LEVELS),
                        "" if np.isnan(d) else _level(d, DIFFICULTY_LEVELS)])
    with paths[2].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TAGS_HEADER)
        for q in range(ds.n_questions):
            for t in ds.question_topics(q):
                w.writerow([ds.question_label(q), ds.topic_label(t)])
    return paths
