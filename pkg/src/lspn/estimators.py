"""scikit-learn style wrappers: fit on a labelled 0/1 design, predict parities.

Each learner keeps the last ``m2`` rows of the training data as its
verification batch (brute force uses every row). After fitting, ``secret_``
holds the recovered index tuple, ``found_`` whether anything verified, and
``outcome_`` the solver's full report.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import bkw, highnoise, lownoise
from .baseline import BaselineBudget, brute_force
from .bitlin import BitMatrix, BitVector, popcount
from .oracle import SampleBatch, default_m2


def check_bits(X, y=None):
    """Validate a 0/1 design (and labels); returns uint8 arrays."""
    if y is None:
        X = check_array(X, dtype=None)
    else:
        X, y = check_X_y(X, y, dtype=None)
    X = np.asarray(X)
    if X.size and not np.isin(X, (0, 1)).all():
        raise ValueError("X must contain only 0 and 1")
    X = X.astype(np.uint8)
    if y is None:
        return X
    y = np.asarray(y)
    if y.size and not np.isin(y, (0, 1)).all():
        raise ValueError("y must contain only 0 and 1")
    return X, y.astype(np.uint8)


def to_batch(X, y) -> SampleBatch:
    return SampleBatch(BitMatrix.from_bits(X, n_cols=X.shape[1]), y, ("array", 0))


class _ParityLearner(ClassifierMixin, BaseEstimator):

    def _split(self, X, y, k):
        m2 = self.m2 if self.m2 is not None else default_m2(X.shape[1], k)
        if m2 >= X.shape[0]:
            raise ValueError(f"need more than m2={m2} rows, got {X.shape[0]}")
        cut = X.shape[0] - m2
        return to_batch(X[:cut], y[:cut]), to_batch(X[cut:], y[cut:])

    def _finish(self, outcome, n):
        self.outcome_ = outcome
        self.found_ = outcome.found
        self.secret_ = tuple(outcome.secret) if outcome.found else ()
        self.n_features_in_ = n
        self.classes_ = np.array([0, 1])
        if not self.found_:
            warnings.warn(f"no parity verified (status {outcome.status}); predicting the empty parity")
        return self

    def fit(self, X, y):
        X, y = check_bits(X, y)
        return self._finish(self._solve(X, y), X.shape[1])

    def predict(self, X):
        check_is_fitted(self, "secret_")
        X = check_bits(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        words = BitMatrix.from_bits(X, n_cols=X.shape[1]).words
        mask = BitVector.from_indices(self.secret_, X.shape[1]).words
        return (popcount(words & mask[None, :]) & 1).astype(np.uint8)


class LowNoiseLearner(_ParityLearner):
    def __init__(self, k=1, eta=0.01, s=None, m2=None, outer_cap=10**9, random_state=None):
        self.k = k
        self.eta = eta
        self.s = s
        self.m2 = m2
        self.outer_cap = outer_cap
        self.random_state = random_state

    def _solve(self, X, y):
        batch, vbatch = self._split(X, y, self.k)
        cfg = lownoise.LowNoiseConfig(s=self.s, outer_cap=self.outer_cap, allow_high_eta=True)
        return lownoise.learn_from_batches(batch, vbatch, self.k, self.eta, cfg,
                                           np.random.default_rng(self.random_state))


class BkwLearner(_ParityLearner):
    def __init__(self, k=1, eta=0.1, s=None, a=None, b=None, m2=None, outer_cap=10**9,
                 random_state=None):
        self.k = k
        self.eta = eta
        self.s = s
        self.a = a
        self.b = b
        self.m2 = m2
        self.outer_cap = outer_cap
        self.random_state = random_state

    def _solve(self, X, y):
        batch, vbatch = self._split(X, y, self.k)
        cfg = bkw.BkwConfig(a=self.a, b=self.b, s=self.s, samples=batch.m, outer_cap=self.outer_cap)
        return bkw.learn_from_batches(batch, vbatch, self.k, self.eta, cfg,
                                      np.random.default_rng(self.random_state))


class HighNoiseLearner(_ParityLearner):
    def __init__(self, k=3, eta=0.1, q=1, m_prime=None, mode="argmax", c_policy="grid",
                 m2=None, random_state=None):
        self.k = k
        self.eta = eta
        self.q = q
        self.m_prime = m_prime
        self.mode = mode
        self.c_policy = c_policy
        self.m2 = m2
        self.random_state = random_state

    def _solve(self, X, y):
        batch, vbatch = self._split(X, y, self.k)
        cfg = highnoise.HighNoiseConfig(q=self.q, m_prime=self.m_prime, mode=self.mode,
                                        c_policy=self.c_policy, stream=False)
        return highnoise.learn_from_batches(batch, vbatch, self.k, self.eta, cfg,
                                            np.random.default_rng(self.random_state))


class BruteForceLearner(_ParityLearner):
    def __init__(self, k=1, max_candidates=10**8):
        self.k = k
        self.max_candidates = max_candidates

    def _solve(self, X, y):
        return brute_force(to_batch(X, y), self.k, BaselineBudget(max_candidates=self.max_candidates))

    def _finish(self, outcome, n):
        # brute force always returns its best candidate, so there is nothing to warn about
        self.outcome_ = outcome
        self.found_ = True
        self.secret_ = tuple(outcome.secret)
        self.n_features_in_ = n
        self.classes_ = np.array([0, 1])
        return self
