"""Exhaustive feature-subset selection under leave-one-out evaluation.

Every nonempty subset of the candidate columns is scored by its LOO test
mean absolute error (hours); the subset with the smallest test error
wins, with ties broken by smaller cardinality and then lexicographically
smallest index set. Subsets containing a column that is constant in some
fold are infeasible: they are skipped and counted, never selected.

The hot loop runs through the kernel backends (compiled or numpy); the
reported metrics of every winning subset are recomputed through the
reference per-fold implementation in ``regression.loo_cv`` so the numbers
carry its exact semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import kernels
from .errors import NoFeasibleSubset
from .regression import Dataset, LinearModel, LooResult, loo_cv, ols_fit


@dataclass(frozen=True)
class SubsetScore:
    subset: tuple[int, ...]
    names: tuple[str, ...]
    test_me: float
    train_me: float
    test_mse: float
    train_mse: float


@dataclass(frozen=True)
class SelectionReport:
    best_subset: tuple[int, ...]
    best_names: tuple[str, ...]
    train_me: float
    test_me: float
    train_mse: float
    test_mse: float
    per_dimension_best: tuple[SubsetScore, ...]
    per_sample_errors: np.ndarray
    per_sample_predictions: np.ndarray
    final_model: LinearModel
    infeasible_columns: tuple[int, ...]
    n_evaluated: int
    n_skipped: int
    n_exact_fallback: int
    n_tied_best: int
    full_subset_test_me: float | None
    backend: str = field(compare=False, default="")


def _column_infeasible(col: np.ndarray) -> bool:
    """True if some LOO fold sees this column as constant."""
    vals, counts = np.unique(col, return_counts=True)
    if vals.shape[0] == 1:
        return True
    return vals.shape[0] == 2 and counts.min() == 1


def _bit_subset(mask: int, feasible: np.ndarray) -> tuple[int, ...]:
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(int(feasible[j]))
        mask >>= 1
        j += 1
    return tuple(out)


def _n_subsets(m: int, max_dim: int) -> int:
    return sum(comb(m, s) for s in range(1, min(m, max_dim) + 1))


def _better(cand: tuple, best: tuple) -> bool:
    """(test_me, cardinality, index tuple) with exact-equality ties."""
    if cand[0] != best[0]:
        return cand[0] < best[0]
    if cand[1] != best[1]:
        return cand[1] < best[1]
    return cand[2] < best[2]


def exhaustive_select(
    data: Dataset,
    candidates=None,
    max_dim: int | None = None,
    jobs: int = 1,
) -> SelectionReport:
    """Score every nonempty candidate subset by LOO and pick the best.

    Parameters
    ----------
    data : Dataset
    candidates : iterable of column indices, optional
        Columns to enumerate over (defaults to all columns).
    max_dim : int, optional
        Cap on subset cardinality.
    jobs : int
        Parallelism hint for the kernel; never changes the result.

    Raises
    ------
    NoFeasibleSubset
        If no candidate column survives the per-fold feasibility check.
    """
    if candidates is None:
        candidates = range(data.n_features)
    candidates = sorted({int(c) for c in candidates})
    if any(c < 0 or c >= data.n_features for c in candidates):
        raise ValueError("candidate index out of range")
    if not candidates:
        raise NoFeasibleSubset("no candidate columns given")
    if max_dim is None:
        max_dim = len(candidates)
    if max_dim < 1:
        raise ValueError("max_dim must be >= 1")

    infeasible = tuple(c for c in candidates if _column_infeasible(data.X[:, c]))
    feasible = np.array([c for c in candidates if c not in set(infeasible)], dtype=int)
    if feasible.size == 0:
        raise NoFeasibleSubset(f"all candidate columns are fold-constant: {infeasible}")

    n_skipped = _n_subsets(len(candidates), max_dim) - _n_subsets(feasible.size, max_dim)

    # globally z-scored design for the kernel: predictions of an OLS fit
    # with intercept are invariant to this affine rescaling, it only
    # conditions the per-fold Gram solves
    Xf = data.X[:, feasible]
    Xz = (Xf - Xf.mean(axis=0)) / Xf.std(axis=0)

    m = int(feasible.size)
    all_masks = np.arange(1, 1 << m, dtype=np.uint64)
    popcount = np.bitwise_count(all_masks)
    keep = popcount <= max_dim
    masks = all_masks[keep]
    dims = popcount[keep].astype(int)

    test_mae, test_mse, train_mae, train_mse, status = kernels.evaluate_subsets(
        Xz, data.y, masks, jobs=jobs
    )

    # ill-conditioned subsets take the exact minimum-norm reference path
    exact_positions = np.flatnonzero(status == 1)
    ref_cache: dict[int, LooResult] = {}

    def reference(pos: int) -> LooResult:
        pos = int(pos)
        if pos not in ref_cache:
            ref_cache[pos] = loo_cv(data, _bit_subset(int(masks[pos]), feasible))
        return ref_cache[pos]

    for pos in exact_positions:
        res = reference(pos)
        test_mae[pos] = res.test_me
        test_mse[pos] = res.test_mse
        train_mae[pos] = res.train_me
        train_mse[pos] = res.train_mse

    def reduce_best(positions: np.ndarray) -> tuple[int, int]:
        """Winner among positions by (test_me, cardinality, lex indices).

        Kernel scores only prefilter: every candidate within a small band
        of the minimum is rescored through the reference loo_cv so the
        final comparison (and any exact tie) happens within one
        arithmetic path. Returns (position, n_exact_ties).
        """
        vals = test_mae[positions]
        lo = float(vals.min())
        near = positions[vals <= lo + 1e-9 * (1.0 + abs(lo))]
        best_pos = None
        best_key = None
        for pos in near:
            ref = reference(pos)
            key = (ref.test_me, int(dims[pos]), _bit_subset(int(masks[pos]), feasible))
            if best_key is None or key < best_key:
                best_key = key
                best_pos = int(pos)
        n_ties = sum(1 for pos in near if reference(pos).test_me == best_key[0])
        return best_pos, n_ties

    all_positions = np.arange(masks.shape[0])
    best_pos, n_tied_best = reduce_best(all_positions)
    best_subset = _bit_subset(int(masks[best_pos]), feasible)

    per_dim = []
    for s in range(1, min(max_dim, m) + 1):
        positions = np.flatnonzero(dims == s)
        if positions.size == 0:
            continue
        pos, _ = reduce_best(positions)
        ref = reference(pos)
        subset = _bit_subset(int(masks[pos]), feasible)
        per_dim.append(
            SubsetScore(
                subset=subset,
                names=tuple(data.names[c] for c in subset),
                test_me=ref.test_me,
                train_me=ref.train_me,
                test_mse=ref.test_mse,
                train_mse=ref.train_mse,
            )
        )

    best_ref: LooResult = reference(best_pos)
    full_me = None
    if max_dim >= m:
        full_pos = np.flatnonzero(masks == np.uint64((1 << m) - 1))
        if full_pos.size:
            full_me = float(test_mae[full_pos[0]])

    return SelectionReport(
        best_subset=best_subset,
        best_names=tuple(data.names[c] for c in best_subset),
        train_me=best_ref.train_me,
        test_me=best_ref.test_me,
        train_mse=best_ref.train_mse,
        test_mse=best_ref.test_mse,
        per_dimension_best=tuple(per_dim),
        per_sample_errors=best_ref.per_sample,
        per_sample_predictions=best_ref.predictions,
        final_model=ols_fit(data.X[:, list(best_subset)], data.y, feature_indices=best_subset),
        infeasible_columns=infeasible,
        n_evaluated=int(masks.shape[0]),
        n_skipped=int(n_skipped),
        n_exact_fallback=int(exact_positions.size),
        n_tied_best=n_tied_best,
        full_subset_test_me=full_me,
        backend=kernels.backend_name(),
    )
