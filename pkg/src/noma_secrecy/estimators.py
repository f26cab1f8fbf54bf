"""scikit-learn style allocators sharing a common predict surface.

All three estimators consume an (n, 5) matrix of raw channel power gains
(columns in :data:`noma_secrecy.channel.GAIN_FIELDS` order) and produce a
far-user power share in (0.5, 1) per row, so they drop into pipelines,
cross-validation, or side-by-side benchmarks interchangeably.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import network
from .allocation import ObjectiveConfig, oracle_search
from .channel import ChannelRealization, PowerSplit, SystemParams

__all__ = ["MlpAllocationRegressor", "GridOracleAllocator", "RandomAllocator"]


def _check_gain_matrix(X):
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] != 5:
        raise ValueError(f"expected 5 gain columns, got {X.shape[1]}")
    return X


class MlpAllocationRegressor(BaseEstimator, RegressorMixin):
    """Feed-forward network regressor for the optimal far-user power share.

    Features are standardized with statistics learned in :meth:`fit`; the
    network squashes its output into (0.5, 1) so predictions are always
    valid shares.  A held-out fraction of the fit data is scored for
    reporting only; the epoch count is fixed, there is no early stopping.

    Parameters
    ----------
    hidden_layers : tuple of int
        Hidden layer widths, e.g. ``(200, 100)``.
    epochs, batch_size, learning_rate, decay_rate
        Mini-batch gradient-descent settings; the learning rate is
        multiplied by ``decay_rate`` after every epoch.
    validation_fraction : float
        Share of the fit data held out for the reported validation MSE.
    seed : int
        Drives initialization, shuffling, and the validation split.
    """

    def __init__(self, hidden_layers=(200, 100), epochs=100, batch_size=64,
                 learning_rate=0.01, decay_rate=0.9, validation_fraction=0.1,
                 seed=0):
        self.hidden_layers = hidden_layers
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.decay_rate = decay_rate
        self.validation_fraction = validation_fraction
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        if not ((y > 0.5) & (y < 1.0)).all():
            raise ValueError("labels must lie strictly in (0.5, 1)")
        self.n_features_in_ = X.shape[1]
        self.feature_mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        self.feature_scale_ = np.where(scale > 0, scale, 1.0)
        Xn = (X - self.feature_mean_) / self.feature_scale_

        rng = np.random.default_rng(self.seed)
        n_val = int(round(self.validation_fraction * X.shape[0]))
        order = rng.permutation(X.shape[0])
        val_idx, tr_idx = order[:n_val], order[n_val:]

        sizes = [X.shape[1], *self.hidden_layers, 1]
        self.net_ = network.init_mlp(sizes, rng)
        cfg = network.TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size,
            learning_rate=self.learning_rate, decay_rate=self.decay_rate,
            seed=self.seed,
        )
        self.loss_history_ = network.train(self.net_, Xn[tr_idx], y[tr_idx], cfg)
        self.train_mse_ = network.mse_loss(
            network.forward_batch(self.net_, Xn[tr_idx]), y[tr_idx])
        self.val_mse_ = (
            network.mse_loss(network.forward_batch(self.net_, Xn[val_idx]), y[val_idx])
            if n_val else float("nan")
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "net_")
        X = check_array(X, dtype=float, ensure_2d=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        Xn = (X - self.feature_mean_) / self.feature_scale_
        return network.forward_batch(self.net_, Xn)

    def inference_macs(self) -> int:
        """Multiply-accumulates per predicted sample."""
        check_is_fitted(self, "net_")
        return network.mac_count(self.net_)

    def save(self, path):
        """Persist the trained network and normalization stats."""
        check_is_fitted(self, "net_")
        network.save_mlp(path, self.net_, self.feature_mean_, self.feature_scale_)

    @classmethod
    def load(cls, path) -> "MlpAllocationRegressor":
        """Rebuild an inference-ready estimator from :meth:`save` output."""
        net, mean, scale = network.load_mlp(path)
        if mean is None:
            raise ValueError(f"{path}: record carries no normalization stats")
        est = cls(hidden_layers=tuple(net.layer_sizes[1:-1]))
        est.net_ = net
        est.feature_mean_ = mean
        est.feature_scale_ = scale
        est.n_features_in_ = net.layer_sizes[0]
        return est


class GridOracleAllocator(BaseEstimator):
    """Exhaustive grid search per realization, as an estimator.

    Stateless apart from its configuration; :meth:`fit` is a no-op so the
    oracle slots into the same harnesses as the learned model.
    """

    def __init__(self, params: SystemParams = None, split: PowerSplit = None,
                 objective: ObjectiveConfig = ObjectiveConfig()):
        self.params = params
        self.split = split
        self.objective = objective

    def fit(self, X=None, y=None):
        return self

    def _require_config(self):
        if self.params is None or self.split is None:
            raise ValueError("params and split must be set before predicting")

    def predict(self, X):
        self._require_config()
        X = _check_gain_matrix(X)
        return np.array([
            oracle_search(ChannelRealization(*row), self.params, self.split,
                          self.objective).alpha_f_star
            for row in X
        ])

    def search(self, X):
        """Full :class:`OptResult` per row, including feasibility."""
        self._require_config()
        X = _check_gain_matrix(X)
        return [
            oracle_search(ChannelRealization(*row), self.params, self.split,
                          self.objective)
            for row in X
        ]


class RandomAllocator(BaseEstimator):
    """Uniform-on-(0.5, 1) baseline; each predict call replays its seed."""

    def __init__(self, seed=0):
        self.seed = seed

    def fit(self, X=None, y=None):
        return self

    def predict(self, X):
        X = _check_gain_matrix(X)
        rng = np.random.default_rng(self.seed)
        return rng.uniform(0.5, 1.0, size=X.shape[0])
