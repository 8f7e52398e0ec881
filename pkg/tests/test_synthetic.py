import numpy as np
import pytest
from scipy.special import expit

from riple.dataset import load_dataset
from riple.synthetic import (SyntheticCohort, generate_cohort, irt_probability,
                             read_ground_truth, simulate_interactions, user_theta, write_cohort)


def test_sparse_dirichlet():
    c = generate_cohort(1000, 5, 10, 0.01, seed=0)
    assert c.true_gaps.max(axis=1).mean() > 0.9


def test_dense_dirichlet():
    c = generate_cohort(1000, 5, 10, 100.0, seed=0)
    assert np.abs(c.true_gaps - 0.1).max() < 0.05


def test_default_scale_shapes():
    c = generate_cohort(400, 1100, 10, 0.1, seed=1)
    assert c.true_gaps.shape == (400, 10)
    np.testing.assert_allclose(c.true_gaps.sum(axis=1), 1.0)
    assert all(len(t) == 1 for t in c.question_topics)
    assert c.discrimination.min() >= 0.2
    assert c.tags().sum(axis=1).tolist() == [1.0] * 1100


def test_multi_topic_questions():
    c = generate_cohort(3, 200, 5, 1.0, seed=2, max_topics_per_question=3)
    sizes = {len(t) for t in c.question_topics}
    assert sizes == {1, 2, 3}
    with pytest.raises(ValueError):
        generate_cohort(3, 5, 2, 1.0, max_topics_per_question=3)


def test_irt_values():
    assert irt_probability(0.3, 1.7, 0.3) == 0.5
    assert irt_probability(np.log(3), 1.0, 0.0) == pytest.approx(0.75)
    assert irt_probability(50.0, 1.0, 0.0) == pytest.approx(1.0)
    assert irt_probability(1.2, 0.8, -0.4) == pytest.approx(expit(0.8 * 1.6))


def test_theta_mapping():
    assert user_theta(np.full(10, 0.1), [3]) == pytest.approx(0.0)
    gaps = np.zeros(10)
    gaps[4], gaps[0] = 0.9, 0.1
    assert user_theta(gaps, [4]) == pytest.approx(-8.0)
    assert irt_probability(-8.0, 1.0, 0.0) < 1e-3
    assert user_theta(gaps, [7]) == 1.0
    with pytest.raises(ValueError):
        user_theta(gaps, [])


def test_empty_and_oversized_simulation():
    c = generate_cohort(3, 4, 2, 1.0)
    assert simulate_interactions(c, 0).n_answers == 0
    with pytest.raises(ValueError):
        simulate_interactions(c, 13)


def test_saturated_items_are_answered():
    n_users, n_questions = 100, 100
    c = SyntheticCohort(true_gaps=np.full((n_users, 2), 0.5),
                        question_topics=tuple((0,) for _ in range(n_questions)),
                        difficulty=np.full(n_questions, -5.0),
                        discrimination=np.full(n_questions, 5.0), alpha=1.0, seed=0)
    ds = simulate_interactions(c, 10000, seed=0)
    assert ds.correct.mean() > 0.99


def test_simulated_correctness_matches_model():
    c = generate_cohort(200, 300, 5, 0.5, seed=3)
    ds = simulate_interactions(c, 30000, seed=4, quantize=False)
    theta = np.array([user_theta(c.true_gaps[u], c.question_topics[q])
                      for u, q in zip(ds.users, ds.questions)])
    p = irt_probability(theta, c.discrimination[ds.questions], c.difficulty[ds.questions])
    se = np.sqrt((p * (1 - p)).sum()) / len(p)
    assert abs(ds.correct.mean() - p.mean()) < 4 * se
    assert ds.interest.min() >= 0 and ds.interest.max() <= 1


def test_quantised_ratings_on_csv_grid():
    c = generate_cohort(20, 30, 3, 0.1, seed=5)
    ds = simulate_interactions(c, 200, seed=6)
    assert set(np.round(ds.difficulty * 2, 9)) <= {0.0, 1.0, 2.0}
    assert set(np.round(ds.interest * 5, 9)) <= set(range(6))


def test_reproducible_generation():
    a = simulate_interactions(generate_cohort(30, 40, 3, 0.1, seed=9), 300, seed=2)
    b = simulate_interactions(generate_cohort(30, 40, 3, 0.1, seed=9), 300, seed=2)
    for name in ("users", "questions", "correct", "interest", "difficulty"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_dimensions_keep_other_draws():
    small = generate_cohort(30, 40, 3, 0.1, seed=9)
    more_users = generate_cohort(60, 40, 3, 0.1, seed=9)
    assert small.question_topics == more_users.question_topics
    np.testing.assert_array_equal(small.difficulty, more_users.difficulty)


def test_written_cohort_reloads(tmp_path, small_cohort):
    cohort, ds = small_cohort
    paths = write_cohort(cohort, ds, tmp_path)
    assert sorted(p.name for p in paths) == ["answers.csv", "ground_truth.csv",
                                            "question_params.csv", "ratings.csv", "tags.csv"]
    back = load_dataset(tmp_path / "answers.csv", tmp_path / "ratings.csv", tmp_path / "tags.csv")
    np.testing.assert_array_equal(read_ground_truth(tmp_path / "ground_truth.csv", back),
                                  cohort.true_gaps)
