"""scikit-learn compatible wrapper around the log-polar codec."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_amplitudes, check_spec, check_words, n_qubits_of
from .codec import RoundingMode, dequantize, quantize
from .error_model import error_budget, optimal_triplet


class LogPolarQuantizer(TransformerMixin, BaseEstimator):
    """Quantize state vectors to packed log-polar words.

    Parameters
    ----------
    bits : int, default=16
        Word size B. Ignored when ``triplet`` is given.
    triplet : tuple of int or str, optional
        Explicit ``(E, F, A)``.  If omitted, ``fit`` picks the triplet that
        minimises the conversion error of ``regime`` for the state size seen.
    regime : {"random", "biased"}, default="random"
    modulus_jitter, phase_jitter : bool, default=False
        Stochastic rounding of the log-modulus and of the phase.
    random_state : int, optional
        Seed for the jitter stream.

    Attributes
    ----------
    spec_ : FormatSpec
    n_qubits_ : int
    budget_ : ErrorBudget
        Analytic error figures at tolerance 1/2.
    """

    def __init__(self, bits=16, triplet=None, regime="random", modulus_jitter=False, phase_jitter=False, random_state=None):
        self.bits = bits
        self.triplet = triplet
        self.regime = regime
        self.modulus_jitter = modulus_jitter
        self.phase_jitter = phase_jitter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_amplitudes(X)
        q = n_qubits_of(X)
        if self.triplet is not None:
            spec = check_spec(self.triplet)
        else:
            spec = optimal_triplet(int(self.bits), q, self.regime)
        self.spec_ = spec
        self.n_qubits_ = q
        self.budget_ = error_budget(q, spec)
        self._rng = np.random.Generator(np.random.Philox(self.random_state))
        return self

    @property
    def _mode(self):
        return RoundingMode(bool(self.modulus_jitter), bool(self.phase_jitter))

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = np.asarray(X)
        squeeze = X.ndim == 1
        X = check_amplitudes(X)
        if n_qubits_of(X) != self.n_qubits_:
            raise ValueError(f"fitted for {self.n_qubits_} qubits, got states of {n_qubits_of(X)}")
        mode = self._mode
        words = quantize(X, self.spec_, mode, None if mode.deterministic else self._rng)
        return words[0] if squeeze else words

    def inverse_transform(self, W):
        check_is_fitted(self, "spec_")
        W = check_words(W, self.spec_)
        return dequantize(W, self.spec_)

    def score(self, X, y=None):
        """Negative mean squared conversion error ``-||T x - x||**2`` (higher is better)."""
        X = check_amplitudes(X)
        back = self.inverse_transform(self.transform(X))
        return -float(np.mean(np.sum(np.abs(back - X) ** 2, axis=-1)))

    def expected_error(self) -> float:
        """Analytic expectation of the quantity :meth:`score` negates."""
        check_is_fitted(self, "spec_")
        return self.budget_.eps_c_sq
