"""18-descriptor feature vector for one impedance spectrum.

Real part: the four logsig parameters. Imaginary part: the 3x4 polynomial
coefficients of a K=3, degree-3 hidden-logistic-process fit, with regimes
re-indexed by where they dominate the axis (regime 2 = central arc), plus
the two log-frequencies delimiting the central regime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundaryCountMismatch
from .logsig import LogsigParams, fit_logsig
from .rhlp import RhlpConfig, fit_em, segment
from .simplex import SimplexConfig
from .spectra import ImpedanceSpectrum, log_axis

_NAMES = (
    "a1", "a2", "a3", "a4",
    "b11", "b12", "b13", "b14",
    "b21", "b22", "b23", "b24",
    "b31", "b32", "b33", "b34",
    "f1", "f2",
)


def feature_names() -> list[str]:
    """Canonical descriptor order: a1..a4, b11..b34, f1, f2.

    b<k><j> is regime k's coefficient of monomial degree j-1, with regimes
    numbered 1..3 from low to high log-frequency dominance.
    """
    return list(_NAMES)


@dataclass(frozen=True)
class FeatureVector:
    a: np.ndarray        # (4,) logsig parameters
    beta: np.ndarray     # (3, 4) regime coefficients, dominance-ordered
    f1: float            # lower boundary of the central regime, log-frequency
    f2: float            # upper boundary, log-frequency
    age_hours: float
    cell_id: str

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if self.a.shape != (4,) or self.beta.shape != (3, 4):
            raise ValueError("a must be (4,) and beta must be (3, 4)")
        if not self.f1 < self.f2:
            raise ValueError("central-regime boundaries must satisfy f1 < f2")
        if not (
            np.isfinite(self.a).all()
            and np.isfinite(self.beta).all()
            and np.isfinite([self.f1, self.f2]).all()
        ):
            raise ValueError("descriptors must be finite")

    def values(self) -> np.ndarray:
        """The 18 descriptors in feature_names() order."""
        return np.concatenate([self.a, self.beta.ravel(), [self.f1, self.f2]])


def _run_labels(labels: np.ndarray) -> list[int]:
    """Labels of the maximal constant runs, in axis order."""
    runs = [int(labels[0])]
    for lab in labels[1:]:
        if lab != runs[-1]:
            runs.append(int(lab))
    return runs


def extract_features(
    s: ImpedanceSpectrum,
    rhlp_cfg: RhlpConfig | None = None,
    simplex_cfg: SimplexConfig | None = None,
) -> FeatureVector:
    """Fit both spectrum parts and assemble the 18-slot descriptor vector.

    The spectrum must already be validated (sorted, finite). Regimes of
    the imaginary-part fit are re-indexed 1..3 by ascending midpoint of
    their dominance intervals, so the beta rows and the (f1, f2) pair are
    stable across runs.

    Raises
    ------
    BoundaryCountMismatch
        If the fitted segmentation does not consist of exactly three
        dominance intervals with distinct regimes (two boundaries around a
        nonempty central regime). The spectrum is flagged, never patched.
    """
    if rhlp_cfg is None:
        rhlp_cfg = RhlpConfig()
    if simplex_cfg is None:
        simplex_cfg = SimplexConfig()
    if rhlp_cfg.K != 3 or rhlp_cfg.p != 3:
        raise ValueError(
            f"18-slot layout requires K=3, p=3 (got K={rhlp_cfg.K}, p={rhlp_cfg.p})"
        )

    logf = log_axis(s)
    params, _ = fit_logsig(logf, s.re_ohm, simplex_cfg)
    model = fit_em(logf, s.im_ohm, rhlp_cfg)
    seg = segment(model, logf)

    runs = _run_labels(seg.labels)
    if len(runs) != 3 or len(set(runs)) != 3 or seg.boundaries.shape[0] != 2:
        raise BoundaryCountMismatch(
            f"expected 3 single-regime dominance intervals, got run labels {runs}"
        )

    beta = model.betas[[lab - 1 for lab in runs]]
    return FeatureVector(
        a=params.as_array(),
        beta=beta,
        f1=float(seg.boundaries[0]),
        f2=float(seg.boundaries[1]),
        age_hours=s.age_hours,
        cell_id=s.cell_id,
    )


def logsig_params_from_vector(v: np.ndarray) -> LogsigParams:
    """The logsig slots of an 18-vector, as parameters."""
    return LogsigParams(*np.asarray(v, dtype=float)[:4])
