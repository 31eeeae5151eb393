"""Four-parameter extended logsig model of the real impedance part.

The curve is an offset sigmoid in log-frequency,

    re(f) = a1 / (1 + exp(-a2 * (f - a3))) + a4,

fitted by least squares with the restarted simplex minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simplex import SimplexConfig, minimize

# exp() saturates rather than overflows beyond this argument magnitude
_EXP_CLAMP = 700.0


@dataclass(frozen=True)
class LogsigParams:
    a1: float  # amplitude, ohm
    a2: float  # slope, 1 / log-frequency
    a3: float  # center, log-frequency
    a4: float  # offset, ohm

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3, self.a4], dtype=float)


def logsig_eval(p: LogsigParams, logf):
    """Evaluate the curve at scalar or array log-frequency."""
    z = np.clip(p.a2 * (np.asarray(logf, dtype=float) - p.a3), -_EXP_CLAMP, _EXP_CLAMP)
    out = p.a1 / (1.0 + np.exp(-z)) + p.a4
    return out if out.ndim else float(out)


def _canonicalize(a: np.ndarray) -> np.ndarray:
    """Fold the (a1,a2,a3,a4) ~ (-a1,-a2,a3,a4+a1) symmetry to a1 >= 0."""
    if a[0] < 0:
        return np.array([-a[0], -a[1], a[2], a[3] + a[0]])
    return a


def fit_logsig(
    logf: np.ndarray, re: np.ndarray, cfg: SimplexConfig | None = None
) -> tuple[LogsigParams, float]:
    """Least-squares fit of the logsig curve to one real-part spectrum.

    Parameters
    ----------
    logf : (n,) array, strictly increasing, n >= 5
    re : (n,) array, ohm
    cfg : SimplexConfig, optional

    Returns
    -------
    (LogsigParams, float)
        Fitted parameters (canonicalized to a1 >= 0) and the achieved
        mean squared error.
    """
    logf = np.asarray(logf, dtype=float)
    re = np.asarray(re, dtype=float)
    if logf.shape != re.shape or logf.ndim != 1:
        raise ValueError("logf and re must be 1-D arrays of equal length")
    if logf.shape[0] < 5:
        raise ValueError("need at least 5 points to fit 4 parameters")
    if (np.diff(logf) <= 0).any():
        raise ValueError("logf must be strictly increasing")

    span = logf[-1] - logf[0]
    x0 = np.array(
        [
            re.max() - re.min(),
            4.0 / span,
            0.5 * (logf[0] + logf[-1]),
            re.min(),
        ]
    )

    def cost(a):
        z = np.clip(a[1] * (logf - a[2]), -_EXP_CLAMP, _EXP_CLAMP)
        resid = re - (a[0] / (1.0 + np.exp(-z)) + a[3])
        return float(np.mean(resid * resid))

    result = minimize(cost, x0, cfg)
    a = _canonicalize(result.argmin)
    return LogsigParams(*(float(v) for v in a)), result.min_value
