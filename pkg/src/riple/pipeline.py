"""End-to-end recommender: gaps and benefit, learning profile, collaborative
filtering on the benefit matrix, and profile-boosted question ranking."""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_non_negative, check_unit_interval
from .baselines import ItemAverage, ItemKNN, UserAverage, UserKNN
from .engine import RecommendationOutput, propagate_gaps, recommend, top_explore
from .factorization import DEFAULT_REG, BiasedMatrixFactorization, MatrixFactorization
from .integration import benefit_matrix, gap_score, integrate
from .profile import DEFAULT_COLD_START_THRESHOLD, build_profile

ALGORITHMS = {
    "MF": MatrixFactorization,
    "BMF": BiasedMatrixFactorization,
    "U-AVG": UserAverage,
    "I-AVG": ItemAverage,
    "U-KNN": UserKNN,
    "I-KNN": ItemKNN,
}


def make_recommender(algorithm, *, n_users=None, n_items=None, n_factors=5, reg=DEFAULT_REG,
                     learning_rate=0.1, n_epochs=100, n_neighbors=20, random_state=0):
    """Instantiate the rating predictor named ``algorithm`` with the relevant
    subset of the hyperparameters."""
    try:
        cls = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of "
                         f"{', '.join(ALGORITHMS)}") from None
    if cls in (MatrixFactorization, BiasedMatrixFactorization):
        return cls(n_factors=n_factors, reg=reg, learning_rate=learning_rate, n_epochs=n_epochs,
                   n_users=n_users, n_items=n_items, random_state=random_state)
    if cls in (UserKNN, ItemKNN):
        return cls(n_neighbors=n_neighbors, n_users=n_users, n_items=n_items)
    return cls(n_users=n_users, n_items=n_items)


class RiPLE(BaseEstimator):
    """Question recommender driven by knowledge gaps and interests.

    ``fit`` takes an :class:`~riple.dataset.InteractionDataset`.  The benefit
    of each answered question blends its gap score with the user's interest
    (weight ``kgw``); a collaborative-filtering model predicts benefit for all
    pairs, and ``beta`` times the user's topic-gap profile, projected onto each
    question's tags, is added before ranking.

    Parameters
    ----------
    algorithm : {"BMF", "MF", "U-AVG", "I-AVG", "U-KNN", "I-KNN"}
    n_factors, reg, learning_rate, n_epochs, n_neighbors, random_state
        Passed to the rating predictor (see :func:`make_recommender`).
    kgw : float in [0, 1]
        Weight of knowledge gaps versus interest in the benefit.
    beta : float >= 0
        Weight of the learning-profile term.  May be changed after ``fit``.
    cold_start_threshold : int
        Users with fewer attempts are profiled with the cohort mean.
    """

    def __init__(self, algorithm="BMF", n_factors=5, reg=DEFAULT_REG, learning_rate=0.1,
                 n_epochs=100, n_neighbors=20, kgw=0.8, beta=0.1,
                 cold_start_threshold=DEFAULT_COLD_START_THRESHOLD, random_state=0):
        self.algorithm = algorithm
        self.n_factors = n_factors
        self.reg = reg
        self.learning_rate = learning_rate
        self.n_epochs = n_epochs
        self.n_neighbors = n_neighbors
        self.kgw = kgw
        self.beta = beta
        self.cold_start_threshold = cold_start_threshold
        self.random_state = random_state

    def _make_recommender(self, ds):
        return make_recommender(
            self.algorithm, n_users=ds.n_users, n_items=ds.n_questions,
            n_factors=self.n_factors, reg=self.reg, learning_rate=self.learning_rate,
            n_epochs=self.n_epochs, n_neighbors=self.n_neighbors, random_state=self.random_state)

    def fit(self, ds, y=None):
        check_unit_interval("kgw", self.kgw)
        check_non_negative("beta", self.beta)
        if ds.n_answers == 0:
            raise ValueError("cannot fit on a dataset without answers")
        integration = integrate(ds, self.kgw)
        recommender = self._make_recommender(ds).fit(ds.pairs, integration.benefit)
        return self._finish(ds, integration, recommender)

    def _finish(self, ds, integration, recommender):
        self.dataset_ = ds
        self.integration_ = integration
        self.profile_ = build_profile(ds, integration.gaps, self.cold_start_threshold)
        self.recommender_ = recommender
        self.r_hat_ = recommender.predict_matrix()
        self.g_hat_ = propagate_gaps(self.profile_.effective_matrix(), ds.tags)
        return self

    @property
    def output_(self):
        check_is_fitted(self, "r_hat_")
        return RecommendationOutput(self.r_hat_, self.g_hat_, float(self.beta))

    def predict(self, X):
        """Predicted benefit for ``(user, question)`` pairs."""
        check_is_fitted(self, "recommender_")
        return self.recommender_.predict(X)

    def benefit(self, ds):
        """Observed benefit of ``ds``'s answered pairs, scored with the average
        difficulties learned during ``fit``."""
        check_is_fitted(self, "integration_")
        gaps = gap_score(ds.correct, self.integration_.avg_difficulty[ds.questions])
        return benefit_matrix(gaps, ds.interest, self.kgw)

    def recommend(self, u, mode="explore", focus_topics=None, top_n=10):
        """Ranked ``(question, score)`` pairs for user index ``u``."""
        check_is_fitted(self, "r_hat_")
        o = self.output_.o
        picked = recommend(u, o, self.dataset_, mode, focus_topics, top_n)
        return [(int(i), float(o[u, i])) for i in picked]

    def top_recommendations(self):
        """First explore-mode recommendation of every user (-1 if none)."""
        check_is_fitted(self, "r_hat_")
        return top_explore(self.output_.o, self.dataset_)

