"""Linear age regression: z-score normalization, OLS, mean error, and
leave-one-out cross-validation.

Normalization statistics are always computed from the training rows of
the fold at hand, never from held-out rows. Predictions are invariant to
the z-scoring (it is an affine reparameterization absorbed by the
intercept), but the fitted weights are reported on the normalized scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstantColumn, EmptySubset


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with age targets. X is (N, d), y is hours."""

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]
    cell_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "cell_ids", tuple(self.cell_ids))
        n, d = self.X.shape
        if n < 3:
            raise ValueError("need at least 3 rows")
        if self.y.shape != (n,) or len(self.cell_ids) != n or len(self.names) != d:
            raise ValueError("inconsistent dataset shapes")
        if not (np.isfinite(self.X).all() and np.isfinite(self.y).all()):
            raise ValueError("dataset entries must be finite")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class LinearModel:
    """OLS weights on z-scored features/target plus the statistics needed
    to apply them to raw feature rows."""

    weights: np.ndarray
    intercept: float
    feature_indices: tuple[int, ...]
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float
    rank_deficient: bool = field(default=False, compare=False)


def _constant_columns(X: np.ndarray) -> np.ndarray:
    # exact equality: np.std of identical values is nonzero rounding noise
    return (X == X[0]).all(axis=0)


def ols_fit(X_sub: np.ndarray, y: np.ndarray, feature_indices=None) -> LinearModel:
    """Least squares on z-scored columns and target.

    Solved by SVD; a rank-deficient design takes the minimum-norm solution
    and flags the model. A constant target is allowed (the fit degenerates
    to the mean predictor); a constant feature column is an error.

    Raises
    ------
    EmptySubset, ConstantColumn
    """
    X_sub = np.asarray(X_sub, dtype=float)
    y = np.asarray(y, dtype=float)
    if X_sub.ndim != 2 or X_sub.shape[1] < 1:
        raise EmptySubset("need at least one feature column")
    n, d = X_sub.shape
    if y.shape != (n,):
        raise ValueError("y length must match X rows")

    const = _constant_columns(X_sub)
    if const.any():
        raise ConstantColumn(f"constant column(s) at positions {np.flatnonzero(const).tolist()}")

    x_mean = X_sub.mean(axis=0)
    x_std = X_sub.std(axis=0)
    y_mean = float(y.mean())
    y_std = float(y.std())
    if y_std == 0.0:
        y_std = 1.0  # constant target: normalized target is all zeros

    Z = (X_sub - x_mean) / x_std
    A = np.column_stack([np.ones(n), Z])
    coef, _, rank, _ = np.linalg.lstsq(A, (y - y_mean) / y_std, rcond=None)

    if feature_indices is None:
        feature_indices = tuple(range(d))
    return LinearModel(
        weights=coef[1:],
        intercept=float(coef[0]),
        feature_indices=tuple(int(i) for i in feature_indices),
        x_mean=x_mean,
        x_std=x_std,
        y_mean=y_mean,
        y_std=y_std,
        rank_deficient=bool(rank < d + 1),
    )


def predict(m: LinearModel, x: np.ndarray) -> float:
    """Estimated hours for one raw feature row (full-width vector)."""
    x = np.asarray(x, dtype=float)
    z = (x[list(m.feature_indices)] - m.x_mean) / m.x_std
    return m.y_mean + m.y_std * (m.intercept + float(m.weights @ z))


def predict_many(m: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Z = (X[:, list(m.feature_indices)] - m.x_mean) / m.x_std
    return m.y_mean + m.y_std * (m.intercept + Z @ m.weights)


def mean_error(pred: np.ndarray, truth: np.ndarray) -> float:
    """Mean absolute error in hours."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.ndim != 1 or pred.shape[0] < 1:
        raise ValueError("pred and truth must be equal-length nonempty vectors")
    return float(np.mean(np.abs(pred - truth)))


@dataclass(frozen=True)
class LooResult:
    train_me: float             # mean over folds of each fold's training MAE
    test_me: float              # MAE of the held-out predictions
    per_sample: np.ndarray      # held-out absolute errors, hours
    predictions: np.ndarray     # held-out predictions, hours
    train_mse: float
    test_mse: float
    fold_train_me: np.ndarray


def loo_cv(data: Dataset, subset) -> LooResult:
    """Leave-one-out evaluation of one feature subset.

    Each fold refits the model (and its normalization statistics) on the
    other N-1 rows and predicts the held-out row. A fold with a constant
    selected column raises ConstantColumn, marking the subset infeasible.
    """
    subset = tuple(int(i) for i in subset)
    if len(subset) == 0:
        raise EmptySubset("subset must be nonempty")
    n = data.n_rows
    if n < 3:
        raise ValueError("need at least 3 rows")

    preds = np.empty(n)
    fold_me = np.empty(n)
    fold_mse = np.empty(n)
    cols = list(subset)
    for i in range(n):
        mask = np.ones(n, dtype=bool)
        mask[i] = False
        model = ols_fit(data.X[np.ix_(mask, cols)], data.y[mask], feature_indices=subset)
        preds[i] = predict(model, data.X[i])
        train_pred = predict_many(model, data.X[mask])
        resid = train_pred - data.y[mask]
        fold_me[i] = np.mean(np.abs(resid))
        fold_mse[i] = np.mean(resid**2)

    err = np.abs(preds - data.y)
    return LooResult(
        train_me=float(fold_me.mean()),
        test_me=float(err.mean()),
        per_sample=err,
        predictions=preds,
        train_mse=float(fold_mse.mean()),
        test_mse=float(np.mean((preds - data.y) ** 2)),
        fold_train_me=fold_me,
    )
