"""Backend selection and chunked dispatch for the LOO subset kernel.

The compiled extension is preferred when it imported cleanly; setting
FCLIFE_PURE_PYTHON=1 forces the numpy fallback. Both backends implement
the same per-subset computation, and ``--jobs`` only splits the mask
array into chunks, so results do not depend on the backend's chunking.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _loo_numpy

if os.environ.get("FCLIFE_PURE_PYTHON"):
    _impl = _loo_numpy
    _BACKEND = "numpy"
else:
    try:
        from . import _loo_kernel as _impl  # type: ignore[attr-defined]

        _BACKEND = "compiled"
    except ImportError:
        _impl = _loo_numpy
        _BACKEND = "numpy"


def backend_name() -> str:
    return _BACKEND


def get_backend(name: str):
    """Explicit backend module, for benchmarks and equivalence tests."""
    if name == "numpy":
        return _loo_numpy
    if name == "compiled":
        from . import _loo_kernel  # noqa: F401  (ImportError if not built)

        return _loo_kernel
    raise ValueError(f"unknown backend {name!r}")


def evaluate_subsets(Xz, y, masks, jobs: int = 1, impl=None):
    """Evaluate LOO errors for every subset bitmask.

    Returns (test_mae, test_mse, train_mae, train_mse, status) arrays
    aligned with ``masks``. status 1 marks subsets that need the exact
    reference path (ill-conditioned or rank-deficient fold).
    """
    if impl is None:
        impl = _impl
    Xz = np.ascontiguousarray(Xz, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    masks = np.ascontiguousarray(masks, dtype=np.uint64)
    n_masks = masks.shape[0]

    test_mae = np.zeros(n_masks)
    test_mse = np.zeros(n_masks)
    train_mae = np.zeros(n_masks)
    train_mse = np.zeros(n_masks)
    status = np.zeros(n_masks, dtype=np.uint8)

    jobs = max(1, int(jobs))
    if jobs == 1 or n_masks < 2 * jobs:
        impl.evaluate_chunk(Xz, y, masks, test_mae, test_mse, train_mae, train_mse, status)
    else:
        bounds = np.linspace(0, n_masks, jobs + 1).astype(int)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(
                    impl.evaluate_chunk,
                    Xz,
                    y,
                    masks[lo:hi],
                    test_mae[lo:hi],
                    test_mse[lo:hi],
                    train_mae[lo:hi],
                    train_mse[lo:hi],
                    status[lo:hi],
                )
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for f in futures:
                f.result()
    return test_mae, test_mse, train_mae, train_mse, status
