import numpy as np
import pytest

from riple.dataset import InteractionDataset, tag_matrix


def make_dataset(pairs, correct=None, interest=None, difficulty=None, tags=None, n_users=None,
                 n_questions=None, n_topics=1):
    """Small dataset from ``(user, question)`` pairs; every question on topic 0
    unless ``tags`` (a list of topic lists per question) is given."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    n = len(pairs)
    if n_users is None:
        n_users = int(pairs[:, 0].max()) + 1 if n else 1
    if tags is None:
        n_questions = n_questions or (int(pairs[:, 1].max()) + 1 if n else 1)
        tags = [[0]] * n_questions
    n_questions = len(tags)
    n_topics = max(n_topics, max((t for ts in tags for t in ts), default=-1) + 1)
    T = tag_matrix(((q, t) for q, ts in enumerate(tags) for t in ts), n_questions, n_topics)
    full = lambda v, fill: np.full(n, fill) if v is None else np.asarray(v, dtype=float)  # noqa: E731
    return InteractionDataset(
        users=pairs[:, 0], questions=pairs[:, 1],
        correct=np.zeros(n, dtype=int) if correct is None else correct,
        interest=full(interest, np.nan), difficulty=full(difficulty, np.nan),
        tags=T, n_users=n_users)


@pytest.fixture
def small_cohort():
    from riple.synthetic import generate_cohort, simulate_interactions
    cohort = generate_cohort(40, 80, 4, 0.1, seed=3)
    return cohort, simulate_interactions(cohort, 900, seed=4)


ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail):
    """Log one acceptance verdict; the lines are echoed at the end of the run."""
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
