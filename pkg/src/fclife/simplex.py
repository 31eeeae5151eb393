"""Nelder-Mead simplex minimizer for small parameter vectors.

Deterministic multi-restart variant: restart 0 starts from the caller's
x0, later restarts jitter x0 with a seeded RNG, and the best vertex over
all restarts wins (ties go to the earliest restart).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteCost


@dataclass(frozen=True)
class SimplexConfig:
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    max_iters: int = 2000
    tol_f: float = 1e-10
    tol_x: float = 1e-9
    restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if not self.reflection > 0:
            raise ValueError("reflection must be > 0")
        if not self.expansion > 1:
            raise ValueError("expansion must be > 1")
        if not 0 < self.contraction < 1:
            raise ValueError("contraction must be in (0, 1)")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must be in (0, 1)")
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be >= 1")


@dataclass(frozen=True)
class SimplexResult:
    argmin: np.ndarray
    min_value: float
    iterations: int
    converged: bool


def _initial_simplex(x0: np.ndarray) -> np.ndarray:
    """x0 plus one vertex per coordinate, perturbed by 5% of its magnitude
    (0.05 absolute where the coordinate is zero)."""
    d = x0.shape[0]
    simplex = np.tile(x0, (d + 1, 1))
    for j in range(d):
        step = 0.05 * abs(x0[j]) if x0[j] != 0.0 else 0.05
        simplex[j + 1, j] += step
    return simplex


def _run_once(cost, x0, cfg: SimplexConfig):
    simplex = _initial_simplex(x0)
    d = x0.shape[0]
    fvals = np.array([cost(v) for v in simplex], dtype=float)
    if not np.isfinite(fvals).all():
        raise NonFiniteCost("cost is not finite at an initial simplex vertex")

    n_iters = 0
    converged = False
    for n_iters in range(1, cfg.max_iters + 1):
        order = np.argsort(fvals, kind="stable")
        simplex = simplex[order]
        fvals = fvals[order]

        diam = np.max(np.abs(simplex[1:] - simplex[0]))
        if fvals[-1] - fvals[0] < cfg.tol_f or diam < cfg.tol_x:
            converged = True
            break

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + cfg.reflection * (centroid - worst)
        fr = cost(xr)

        if fr < fvals[0]:
            xe = centroid + cfg.expansion * (xr - centroid)
            fe = cost(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + cfg.contraction * (xr - centroid)
            else:
                xc = centroid + cfg.contraction * (worst - centroid)
            fc = cost(xc)
            if fc < min(fr, fvals[-1]):
                simplex[-1], fvals[-1] = xc, fc
            else:
                # shrink toward the best vertex
                for i in range(1, d + 1):
                    simplex[i] = simplex[0] + cfg.shrink * (simplex[i] - simplex[0])
                    fvals[i] = cost(simplex[i])

    best = int(np.argmin(fvals))
    return simplex[best].copy(), float(fvals[best]), n_iters, converged


def minimize(cost, x0, cfg: SimplexConfig | None = None) -> SimplexResult:
    """Minimize a scalar cost over a real vector by restarted Nelder-Mead.

    Parameters
    ----------
    cost : callable
        Maps a 1-D float array to a finite scalar.
    x0 : array-like
        Starting point, dimension >= 1.
    cfg : SimplexConfig, optional

    Returns
    -------
    SimplexResult
        Best vertex over all restarts. ``converged`` reports whether the
        winning restart stopped on the diameter/spread tolerances rather
        than on the iteration cap.

    Raises
    ------
    NonFiniteCost
        If the cost is NaN/inf at any initial vertex.
    """
    if cfg is None:
        cfg = SimplexConfig()
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1 or x0.shape[0] < 1:
        raise ValueError("x0 must be a 1-D vector of dimension >= 1")

    best = None
    for r in range(cfg.restarts):
        if r == 0:
            start = x0
        else:
            rng = np.random.default_rng([cfg.seed, r])
            start = x0 + (0.3 * np.abs(x0) + 0.05) * rng.standard_normal(x0.shape[0])
        argmin, fmin, iters, conv = _run_once(cost, start, cfg)
        if best is None or fmin < best.min_value:
            best = SimplexResult(argmin=argmin, min_value=fmin, iterations=iters, converged=conv)
    return best
