import numpy as np
import pytest

from riple.baselines import (ItemAverage, ItemKNN, UserAverage, UserKNN, pearson_matrix,
                             pearson_similarity)


def test_pearson_examples():
    x = np.array([0.1, 0.5, 0.3])
    assert pearson_similarity(x, x) == pytest.approx(1.0)
    xc = x - x.mean()
    assert pearson_similarity(xc, -xc) == pytest.approx(-1.0)
    assert pearson_similarity(np.array([0.1, np.nan]), np.array([0.2, 0.5])) == 0.0
    assert pearson_similarity(np.array([0.2, 0.2, 0.2]), x) == 0.0


def test_pearson_matrix_matches_scalar():
    rng = np.random.default_rng(0)
    R = rng.random((8, 10))
    R[rng.random(R.shape) < 0.5] = np.nan
    S = pearson_matrix(R)
    for u in range(8):
        for v in range(8):
            expected = 0.0 if u == v else pearson_similarity(R[u], R[v])
            assert S[u, v] == pytest.approx(expected, abs=1e-9)


def test_averages():
    X = np.array([[0, 0], [0, 1], [1, 0], [2, 1]])
    y = np.array([0.2, 0.4, 0.1, 0.3])
    ua = UserAverage(n_users=4, n_items=3).fit(X, y)
    assert ua.predict([[0, 2]])[0] == pytest.approx(0.3)
    assert ua.predict([[3, 0]])[0] == pytest.approx(y.mean())
    ia = ItemAverage(n_users=4, n_items=3).fit(X, y)
    assert ia.predict([[3, 0]])[0] == pytest.approx(0.15)
    assert ia.predict([[0, 2]])[0] == pytest.approx(y.mean())


@pytest.mark.parametrize("cls", [UserAverage, ItemAverage, UserKNN, ItemKNN])
def test_constant_ratings(cls):
    X = np.array([[u, i] for u in range(4) for i in range(4) if (u + i) % 3])
    m = cls().fit(X, np.full(len(X), 0.4))
    np.testing.assert_allclose(m.predict_matrix(), 0.4)


def test_single_neighbour_prediction():
    # users 0 and 1 agree perfectly on items 0..2; user 1 rated item 3 at mean + 0.1
    X = np.array([[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2], [1, 3]])
    y = np.array([0.1, 0.3, 0.5, 0.2, 0.4, 0.6, 0.5])
    m = UserKNN(n_neighbors=1).fit(X, y)
    assert m.similarity_[0, 1] == pytest.approx(1.0)
    rbar_u, rbar_v = 0.3, y[3:].mean()
    expected = rbar_u + (0.5 - rbar_v)
    assert m.predict([[0, 3]])[0] == pytest.approx(expected)


def test_no_positive_neighbour_falls_back():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1], [1, 2]])
    y = np.array([0.1, 0.5, 0.5, 0.1, 0.9])
    m = UserKNN().fit(X, y)
    assert m.similarity_[0, 1] < 0
    assert m.predict([[0, 2]])[0] == pytest.approx(0.3)
    mi = ItemKNN(n_items=4).fit(X, y)
    assert mi.predict([[0, 3]])[0] == pytest.approx(y.mean())


def test_user_shift_moves_predictions():
    rng = np.random.default_rng(1)
    X = np.array([[u, i] for u in range(6) for i in range(8) if rng.random() < 0.7])
    y = rng.random(len(X))
    base = UserKNN(n_neighbors=3).fit(X, y).predict_matrix()
    shifted = y + np.where(X[:, 0] == 2, 0.25, 0.0)
    moved = UserKNN(n_neighbors=3).fit(X, shifted).predict_matrix()
    np.testing.assert_allclose(moved[2], base[2] + 0.25)


def test_knn_neighbour_ties_use_lower_index():
    # users 1 and 2 are equally similar to user 0 but rated item 3 differently
    X = np.array([[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2], [1, 3],
                  [2, 0], [2, 1], [2, 2], [2, 3]])
    y = np.array([0.1, 0.2, 0.3, 0.1, 0.2, 0.3, 0.9, 0.1, 0.2, 0.3, 0.0])
    m = UserKNN(n_neighbors=1).fit(X, y)
    assert m.similarity_[0, 1] == pytest.approx(m.similarity_[0, 2])
    assert m.predict([[0, 3]])[0] == pytest.approx(0.2 + 0.9 - y[3:7].mean())


def test_invalid_neighbourhood():
    with pytest.raises(ValueError):
        UserKNN(n_neighbors=0).fit(np.array([[0, 0]]), np.array([0.1]))
