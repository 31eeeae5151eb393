"""Core spectrum types and validation.

An impedance spectrum is a frequency sweep with paired real/imaginary
impedance samples and an age label. All downstream fitting works on the
natural-log frequency axis; base e is a fixed convention of this package
(any other base would only rescale fitted parameters).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateFrequency,
    MismatchedLengths,
    NegativeAge,
    NonFiniteValue,
    NonPositiveFrequency,
    TooFewPoints,
)

MIN_POINTS = 8


@dataclass(frozen=True)
class ImpedanceSpectrum:
    """One impedance sweep: frequencies in Hz, real/imaginary parts in ohm,
    and the stack's operating age in hours at measurement time.

    Instances are immutable; use :func:`validate_spectrum` to obtain a
    checked, frequency-sorted spectrum.
    """

    freqs_hz: np.ndarray
    re_ohm: np.ndarray
    im_ohm: np.ndarray
    age_hours: float = 0.0
    cell_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "freqs_hz", np.asarray(self.freqs_hz, dtype=float))
        object.__setattr__(self, "re_ohm", np.asarray(self.re_ohm, dtype=float))
        object.__setattr__(self, "im_ohm", np.asarray(self.im_ohm, dtype=float))

    @property
    def n_points(self) -> int:
        return self.freqs_hz.shape[0]


def validate_spectrum(raw: ImpedanceSpectrum) -> ImpedanceSpectrum:
    """Check a raw spectrum and return it sorted by ascending frequency.

    Raises
    ------
    MismatchedLengths, TooFewPoints, NonFiniteValue, NonPositiveFrequency,
    DuplicateFrequency, NegativeAge
    """
    f, re, im = raw.freqs_hz, raw.re_ohm, raw.im_ohm
    if f.ndim != 1 or re.ndim != 1 or im.ndim != 1:
        raise MismatchedLengths("spectrum arrays must be one-dimensional")
    if not (f.shape == re.shape == im.shape):
        raise MismatchedLengths(
            f"array lengths differ: freqs={f.shape[0]}, re={re.shape[0]}, im={im.shape[0]}"
        )
    if f.shape[0] < MIN_POINTS:
        raise TooFewPoints(f"need at least {MIN_POINTS} points, got {f.shape[0]}")
    if not (np.isfinite(f).all() and np.isfinite(re).all() and np.isfinite(im).all()):
        raise NonFiniteValue("spectrum contains NaN or infinite samples")
    if not np.isfinite(raw.age_hours):
        raise NonFiniteValue("age_hours is not finite")
    if raw.age_hours < 0:
        raise NegativeAge(f"age_hours must be >= 0, got {raw.age_hours}")
    if (f <= 0).any():
        raise NonPositiveFrequency("all frequencies must be > 0 Hz")

    order = np.argsort(f, kind="stable")
    f = f[order]
    if (np.diff(f) == 0).any():
        raise DuplicateFrequency("spectrum contains repeated frequency values")
    return ImpedanceSpectrum(
        freqs_hz=f,
        re_ohm=re[order],
        im_ohm=im[order],
        age_hours=float(raw.age_hours),
        cell_id=raw.cell_id,
    )


def log_axis(s: ImpedanceSpectrum) -> np.ndarray:
    """Natural-log frequency axis of a validated spectrum."""
    return np.log(s.freqs_hz)
