"""Neighbourhood and average-rating recommenders used for comparison."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from numba import njit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_pairs, check_positive_int, check_targets


def pearson_similarity(x, y, min_overlap=2):
    """Pearson correlation of two rating vectors over their co-rated entries.

    ``NaN`` marks a missing rating.  Returns 0 when fewer than ``min_overlap``
    entries are co-rated or either side has zero variance on the overlap.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    both = ~np.isnan(x) & ~np.isnan(y)
    if both.sum() < max(min_overlap, 2):
        return 0.0
    xs = x[both] - x[both].mean()
    ys = y[both] - y[both].mean()
    den = np.sqrt(np.dot(xs, xs) * np.dot(ys, ys))
    if den <= 1e-12:
        return 0.0
    return float(np.clip(np.dot(xs, ys) / den, -1.0, 1.0))


def pearson_matrix(R, min_overlap=2):
    """All-pairs row similarity of a ratings matrix with ``NaN`` for missing.

    Same conventions as :func:`pearson_similarity`; the diagonal is set to 0.
    """
    mask = ~np.isnan(R)
    X = np.where(mask, R, 0.0)
    W = mask.astype(np.float64)
    n = W @ W.T
    S = X @ W.T              # S[u, v] = sum of u's ratings on items v also rated
    S2 = (X * X) @ W.T
    P = X @ X.T
    with np.errstate(divide="ignore", invalid="ignore"):
        cov = P - S * S.T / n
        var_u = S2 - S * S / n
        var_v = var_u.T
        sim = cov / np.sqrt(var_u * var_v)
    # the variance test tolerates rounding in the shortcut sums
    scale = np.maximum(S2, S2.T) + 1.0
    ok = (n >= max(min_overlap, 2)) & (var_u > 1e-10 * scale) & (var_v > 1e-10 * scale)
    sim = np.where(ok, np.clip(sim, -1.0, 1.0), 0.0)
    np.fill_diagonal(sim, 0.0)
    return sim


class _RatingBaseline(RegressorMixin, BaseEstimator):
    def _prepare(self, X, y):
        users, items = check_pairs(X, self.n_users, self.n_items)
        if users.size == 0:
            raise ValueError("cannot fit on an empty rating set")
        y = check_targets(y, users.size)
        self.n_users_ = self.n_users if self.n_users is not None else int(users.max()) + 1
        self.n_items_ = self.n_items if self.n_items is not None else int(items.max()) + 1
        self.global_mean_ = float(y.mean())
        self.train_pairs_ = np.column_stack((users, items))
        self.train_values_ = y.copy()
        return users, items, y

    def predict_matrix(self):
        check_is_fitted(self, "global_mean_")
        uu, ii = np.meshgrid(np.arange(self.n_users_), np.arange(self.n_items_), indexing="ij")
        return self.predict(np.column_stack((uu.ravel(), ii.ravel()))).reshape(
            self.n_users_, self.n_items_)


def _means(index, y, size, fallback):
    totals = np.bincount(index, weights=y, minlength=size)
    counts = np.bincount(index, minlength=size)
    out = np.full(size, fallback)
    np.divide(totals, counts, out=out, where=counts > 0)
    return out


class UserAverage(_RatingBaseline):
    """Predicts each user's mean training rating (global mean for unseen users)."""

    def __init__(self, n_users=None, n_items=None):
        self.n_users = n_users
        self.n_items = n_items

    def fit(self, X, y):
        users, _, y = self._prepare(X, y)
        self.user_means_ = _means(users, y, self.n_users_, self.global_mean_)
        return self

    def predict(self, X):
        check_is_fitted(self, "user_means_")
        users, _ = check_pairs(X, self.n_users_, self.n_items_)
        return self.user_means_[users].copy()


class ItemAverage(_RatingBaseline):
    """Predicts each item's mean training rating (global mean for unseen items)."""

    def __init__(self, n_users=None, n_items=None):
        self.n_users = n_users
        self.n_items = n_items

    def fit(self, X, y):
        _, items, y = self._prepare(X, y)
        self.item_means_ = _means(items, y, self.n_items_, self.global_mean_)
        return self

    def predict(self, X):
        check_is_fitted(self, "item_means_")
        _, items = check_pairs(X, self.n_users_, self.n_items_)
        return self.item_means_[items].copy()


@njit(cache=True)
def _knn_predict(rows, cols, sim, indptr, indices, data, means, k):
    """Mean-centred neighbour prediction for each (row, col) query.

    ``indptr/indices/data`` list, for every column, the rows that rated it.
    Returns NaN where no neighbour with positive similarity rated the column.
    """
    out = np.empty(rows.shape[0])
    for t in range(rows.shape[0]):
        r = rows[t]
        c = cols[t]
        start = indptr[c]
        stop = indptr[c + 1]
        cand = np.empty(stop - start, dtype=np.int64)
        score = np.empty(stop - start)
        m = 0
        for p in range(start, stop):
            v = indices[p]
            s = sim[r, v]
            if v != r and s > 0:
                cand[m] = p
                score[m] = -s
                m += 1
        if m == 0:
            out[t] = np.nan
            continue
        # ties keep ascending neighbour order (indices are sorted within a column)
        order = np.argsort(score[:m], kind="mergesort")
        num = 0.0
        den = 0.0
        for q in range(min(k, m)):
            p = cand[order[q]]
            v = indices[p]
            s = sim[r, v]
            num += s * (data[p] - means[v])
            den += abs(s)
        out[t] = means[r] + num / den
    return out


class UserKNN(_RatingBaseline):
    """User-based nearest neighbours with Pearson similarity.

    Prediction is ``rbar_u + sum_v s_uv (r_vi - rbar_v) / sum_v |s_uv|`` over
    the ``n_neighbors`` most similar users that rated ``i`` with ``s_uv > 0``;
    without such neighbours it falls back to the user average.
    """

    _transpose = False

    def __init__(self, n_neighbors=20, min_overlap=2, n_users=None, n_items=None):
        self.n_neighbors = n_neighbors
        self.min_overlap = min_overlap
        self.n_users = n_users
        self.n_items = n_items

    def fit(self, X, y):
        check_positive_int("n_neighbors", self.n_neighbors)
        users, items, y = self._prepare(X, y)
        if self._transpose:
            rows, cols, shape = items, users, (self.n_items_, self.n_users_)
        else:
            rows, cols, shape = users, items, (self.n_users_, self.n_items_)
        dense = np.full(shape, np.nan)
        dense[rows, cols] = y
        self.similarity_ = pearson_matrix(dense, self.min_overlap)
        self.means_ = _means(rows, y, shape[0], self.global_mean_)
        csc = sp.csc_matrix((y, (rows, cols)), shape=shape)
        csc.sort_indices()
        self._columns = (csc.indptr.astype(np.int64), csc.indices.astype(np.int64),
                         csc.data.astype(np.float64))
        return self

    def predict(self, X):
        check_is_fitted(self, "similarity_")
        users, items = check_pairs(X, self.n_users_, self.n_items_)
        rows, cols = (items, users) if self._transpose else (users, items)
        out = _knn_predict(rows, cols, self.similarity_, *self._columns, self.means_,
                           int(self.n_neighbors))
        missing = np.isnan(out)
        out[missing] = self.means_[rows[missing]]
        return out


class ItemKNN(UserKNN):
    """Item-based counterpart of :class:`UserKNN` (neighbours are items the
    user rated; falls back to the item average)."""

    _transpose = True
