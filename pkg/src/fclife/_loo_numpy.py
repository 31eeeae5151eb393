"""Pure-numpy leave-one-out subset evaluation kernel.

Same contract as the compiled kernel in ``_loo_kernel.pyx``: for every
feature-subset bitmask, run all N leave-one-out folds of an
intercept-plus-columns OLS fit on the globally z-scored design and return
test/train mean absolute and squared errors in hours.

Per fold the Gram matrix is rank-one downdated from the full-data Gram
and solved via Cholesky; a fold whose smallest Cholesky pivot falls below
RCOND times the Gram diagonal scale marks the whole subset as needing the
exact (minimum-norm) reference path (status 1).
"""

from __future__ import annotations

import numpy as np

RCOND = 1e-10


def _columns(mask: int) -> list[int]:
    cols = []
    j = 0
    while mask:
        if mask & 1:
            cols.append(j)
        mask >>= 1
        j += 1
    return cols


def evaluate_chunk(Xz, y, masks, test_mae, test_mse, train_mae, train_mse, status):
    """Fill the output slices for one chunk of subset bitmasks."""
    Xz = np.ascontiguousarray(Xz, dtype=float)
    y = np.asarray(y, dtype=float)
    n = Xz.shape[0]
    ones = np.ones((n, 1))
    eye_idx = np.arange(n)

    for pos in range(len(masks)):
        cols = _columns(int(masks[pos]))
        A = np.concatenate([ones, Xz[:, cols]], axis=1)
        G = A.T @ A
        bvec = A.T @ y

        Gi = G[None, :, :] - A[:, :, None] * A[:, None, :]
        bi = bvec[None, :] - y[:, None] * A
        maxdiag = Gi[:, eye_idx[: A.shape[1]], eye_idx[: A.shape[1]]].max(axis=1)
        try:
            L = np.linalg.cholesky(Gi)
        except np.linalg.LinAlgError:
            status[pos] = 1
            continue
        piv2 = np.einsum("ijj->ij", L) ** 2
        if (piv2 <= RCOND * maxdiag[:, None]).any():
            status[pos] = 1
            continue

        beta = np.linalg.solve(Gi, bi[:, :, None])[:, :, 0]  # (n folds, d+1)
        P = A @ beta.T                  # row j predicted under fold i model
        R = y[:, None] - P
        loo_resid = np.diagonal(R)
        abs_R = np.abs(R)
        fold_abs = (abs_R.sum(axis=0) - np.abs(loo_resid)) / (n - 1)
        fold_sq = ((R * R).sum(axis=0) - loo_resid**2) / (n - 1)

        test_mae[pos] = np.abs(loo_resid).mean()
        test_mse[pos] = (loo_resid**2).mean()
        train_mae[pos] = fold_abs.mean()
        train_mse[pos] = fold_sq.mean()
        status[pos] = 0
