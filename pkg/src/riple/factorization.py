"""Matrix factorisation (plain and biased) trained by stochastic gradient descent.

Ratings are mean-normalised per item before training and the item means are
added back at prediction time, so a user or item with no training ratings
predicts the item average instead of zero.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_non_negative, check_pairs, check_positive_int, check_targets

DEFAULT_REG = 0.02


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(f"factors became non-finite in epoch {epoch}; lower the learning rate")


def normalize(users, items, values, n_items):
    """Subtract each item's mean observed value.

    Returns ``(residuals, item_means)``; items without observations get a mean
    of 0.
    """
    values = np.asarray(values, dtype=np.float64)
    totals = np.bincount(items, weights=values, minlength=n_items)
    counts = np.bincount(items, minlength=n_items)
    means = np.zeros(n_items)
    np.divide(totals, counts, out=means, where=counts > 0)
    return values - means[items], means


def denormalize(items, residuals, item_means):
    return np.asarray(residuals) + np.asarray(item_means)[items]


@njit(cache=True)
def _sgd_epoch(users, items, ratings, order, H, Q, bu, bi, mu, lr, reg, biased):
    K = H.shape[1]
    for t in range(order.shape[0]):
        idx = order[t]
        u = users[idx]
        i = items[idx]
        pred = 0.0
        for k in range(K):
            pred += H[u, k] * Q[i, k]
        if biased:
            pred += mu + bu[u] + bi[i]
        e = ratings[idx] - pred
        # both factor updates use the pre-update values
        for k in range(K):
            h = H[u, k]
            q = Q[i, k]
            H[u, k] = h + lr * (e * q - reg * h)
            Q[i, k] = q + lr * (e * h - reg * q)
        if biased:
            bu[u] += lr * (e - reg * bu[u])
            bi[i] += lr * (e - reg * bi[i])


def _residuals(users, items, ratings, H, Q, user_bias=None, item_bias=None, global_mean=0.0):
    pred = np.einsum("nk,nk->n", H[users], Q[items])
    if user_bias is not None:
        pred = pred + global_mean + user_bias[users] + item_bias[items]
    return ratings - pred


def objective(users, items, ratings, H, Q, reg, user_bias=None, item_bias=None,
              global_mean=0.0):
    """Regularised squared error summed over the training ratings.

    Each observed ``(u, i)`` contributes ``e**2 + reg * (|q_i|**2 + |h_u|**2)``
    (plus the squared biases when given), matching the per-rating SGD updates.
    """
    e = _residuals(users, items, ratings, H, Q, user_bias, item_bias, global_mean)
    penalty = np.sum(H[users] ** 2) + np.sum(Q[items] ** 2)
    if user_bias is not None:
        penalty += np.sum(user_bias[users] ** 2) + np.sum(item_bias[items] ** 2)
    return float(np.sum(e ** 2) + reg * penalty)


def objective_gradient(users, items, ratings, H, Q, reg):
    """Analytic gradient of :func:`objective` (unbiased form) w.r.t. ``H`` and ``Q``."""
    e = _residuals(users, items, ratings, H, Q)[:, None]
    dH = np.zeros_like(H)
    dQ = np.zeros_like(Q)
    np.add.at(dH, users, -2 * e * Q[items] + 2 * reg * H[users])
    np.add.at(dQ, items, -2 * e * H[users] + 2 * reg * Q[items])
    return dH, dQ


class MatrixFactorization(RegressorMixin, BaseEstimator):
    """Latent-factor model ``r_ui ~ q_i . h_u + rbar_i`` fit by SGD.

    Parameters
    ----------
    n_factors : int
        Latent dimension K.
    reg : float
        L2 regularisation strength.
    learning_rate : float
        SGD step size.
    n_epochs : int
        Full passes over the (shuffled) training ratings.
    n_users, n_items : int, optional
        Model dimensions.  Default to ``max index + 1`` in the training pairs;
        pass them to size the model for users or items with no training data.
    random_state : int
        Seeds the factor initialisation and per-epoch shuffles.

    Users and items without training ratings get all-zero factors (the
    minimiser of the regularisation term alone), so they predict the item mean.
    """

    _biased = False
    _min_factors = 1

    def __init__(self, n_factors=5, reg=DEFAULT_REG, learning_rate=0.1, n_epochs=100,
                 n_users=None, n_items=None, random_state=0):
        self.n_factors = n_factors
        self.reg = reg
        self.learning_rate = learning_rate
        self.n_epochs = n_epochs
        self.n_users = n_users
        self.n_items = n_items
        self.random_state = random_state

    def fit(self, X, y):
        K = check_positive_int("n_factors", self.n_factors, self._min_factors)
        reg = check_non_negative("reg", self.reg)
        lr = check_non_negative("learning_rate", self.learning_rate)
        epochs = check_positive_int("n_epochs", self.n_epochs)
        users, items = check_pairs(X, self.n_users, self.n_items)
        if users.size == 0:
            raise ValueError("cannot fit on an empty rating set")
        y = check_targets(y, users.size)
        n_users = self.n_users if self.n_users is not None else int(users.max()) + 1
        n_items = self.n_items if self.n_items is not None else int(items.max()) + 1

        resid, self.item_means_ = normalize(users, items, y, n_items)
        rng = np.random.default_rng(self.random_state)
        H = rng.standard_normal((n_users, K))
        Q = rng.standard_normal((n_items, K))
        H[np.bincount(users, minlength=n_users) == 0] = 0.0
        Q[np.bincount(items, minlength=n_items) == 0] = 0.0
        bu = np.zeros(n_users)
        bi = np.zeros(n_items)
        mu = float(resid.mean()) if self._biased else 0.0
        bias_args = (bu, bi, mu) if self._biased else ()

        history = []
        for epoch in range(1, epochs + 1):
            order = rng.permutation(users.size)
            _sgd_epoch(users, items, resid, order, H, Q, bu, bi, mu, lr, reg, self._biased)
            with np.errstate(over="ignore", invalid="ignore"):
                value = objective(users, items, resid, H, Q, reg, *bias_args)
            if not (np.isfinite(value) and np.isfinite(H).all() and np.isfinite(Q).all()
                    and np.isfinite(bu).all() and np.isfinite(bi).all()):
                raise TrainingDivergedError(epoch)
            history.append(value)

        self.user_factors_ = H
        self.item_factors_ = Q
        self.objective_history_ = np.asarray(history)
        if self._biased:
            self.user_bias_ = bu
            self.item_bias_ = bi
            self.global_mean_ = mu
        self.n_users_ = n_users
        self.n_items_ = n_items
        return self

    def _offset(self, users, items):
        out = self.item_means_[items]
        if self._biased:
            out = out + self.global_mean_ + self.user_bias_[users] + self.item_bias_[items]
        return out

    def predict(self, X):
        check_is_fitted(self, "item_factors_")
        users, items = check_pairs(X, self.n_users_, self.n_items_)
        dot = np.einsum("nk,nk->n", self.user_factors_[users], self.item_factors_[items])
        return dot + self._offset(users, items)

    def predict_matrix(self):
        """Dense ``n_users x n_items`` matrix of predictions."""
        check_is_fitted(self, "item_factors_")
        out = self.user_factors_ @ self.item_factors_.T + self.item_means_[None, :]
        if self._biased:
            out += self.global_mean_ + self.user_bias_[:, None] + self.item_bias_[None, :]
        return out


class BiasedMatrixFactorization(MatrixFactorization):
    """Matrix factorisation with a global mean and per-user / per-item biases:
    ``r_ui ~ mu + b_u + b_i + q_i . h_u + rbar_i``.

    ``n_factors=0`` gives the bias-only model.
    """

    _biased = True
    _min_factors = 0
