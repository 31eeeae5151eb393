import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fclife import ImpedanceSpectrum, log_axis, validate_spectrum
from fclife.errors import (
    DuplicateFrequency,
    MismatchedLengths,
    NegativeAge,
    NonFiniteValue,
    NonPositiveFrequency,
    TooFewPoints,
)


def make_raw(n=50, descending=False, seed=0):
    rng = np.random.default_rng(seed)
    f = np.geomspace(0.01, 30000.0, n)
    if descending:
        f = f[::-1]
    return ImpedanceSpectrum(
        freqs_hz=f,
        re_ohm=rng.standard_normal(n),
        im_ohm=rng.standard_normal(n),
        age_hours=100.0,
        cell_id="FCX",
    )


def test_descending_spectrum_is_resorted():
    raw = make_raw(descending=True)
    s = validate_spectrum(raw)
    assert (np.diff(s.freqs_hz) > 0).all()
    # same (freq, re, im) triples survive the sort
    assert np.array_equal(np.sort(s.freqs_hz), np.sort(raw.freqs_hz))
    order = np.argsort(raw.freqs_hz)
    assert np.array_equal(s.re_ohm, raw.re_ohm[order])
    assert np.array_equal(s.im_ohm, raw.im_ohm[order])


def test_zero_frequency_rejected():
    raw = make_raw()
    raw.freqs_hz[3] = 0.0
    with pytest.raises(NonPositiveFrequency):
        validate_spectrum(raw)


def test_mismatched_lengths_rejected():
    raw = ImpedanceSpectrum(
        freqs_hz=np.geomspace(1, 100, 50),
        re_ohm=np.zeros(50),
        im_ohm=np.zeros(49),
    )
    with pytest.raises(MismatchedLengths):
        validate_spectrum(raw)


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        validate_spectrum(make_raw(n=7))
    validate_spectrum(make_raw(n=8))  # boundary accepted


def test_nan_rejected():
    raw = make_raw()
    raw.im_ohm[0] = np.nan
    with pytest.raises(NonFiniteValue):
        validate_spectrum(raw)


def test_duplicate_frequency_rejected():
    raw = make_raw()
    raw.freqs_hz[5] = raw.freqs_hz[6]
    with pytest.raises(DuplicateFrequency):
        validate_spectrum(raw)


def test_negative_age_rejected():
    raw = make_raw()
    object.__setattr__(raw, "age_hours", -1.0)
    with pytest.raises(NegativeAge):
        validate_spectrum(raw)


def test_validate_idempotent():
    s1 = validate_spectrum(make_raw(descending=True))
    s2 = validate_spectrum(s1)
    assert np.array_equal(s1.freqs_hz, s2.freqs_hz)
    assert np.array_equal(s1.re_ohm, s2.re_ohm)
    assert np.array_equal(s1.im_ohm, s2.im_ohm)
    assert s1.age_hours == s2.age_hours and s1.cell_id == s2.cell_id


def test_log_axis_unit_values():
    e = np.e
    f = np.array([1.0, e, e**2, e**3, e**4, e**5, e**6, e**7])
    s = validate_spectrum(
        ImpedanceSpectrum(freqs_hz=f, re_ohm=np.zeros(8), im_ohm=np.zeros(8))
    )
    lf = log_axis(s)
    assert lf[0] == 0.0
    np.testing.assert_allclose(lf, np.arange(8.0), rtol=0, atol=1e-14)

    f10 = np.array([10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0, 1280.0])
    s10 = validate_spectrum(
        ImpedanceSpectrum(freqs_hz=f10, re_ohm=np.zeros(8), im_ohm=np.zeros(8))
    )
    # ln 10, frozen
    assert abs(log_axis(s10)[0] - 2.302585092994046) < 1e-15


def test_log_axis_geometric_sweep_is_uniform():
    s = validate_spectrum(make_raw(n=50))
    lf = log_axis(s)
    np.testing.assert_allclose(lf, np.log(s.freqs_hz), rtol=0, atol=0)
    steps = np.diff(lf)
    np.testing.assert_allclose(steps, steps[0], rtol=0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.floats(min_value=1e-6, max_value=1e6, allow_nan=False),
        min_size=8,
        max_size=60,
        unique=True,
    )
)
def test_log_axis_strictly_increasing(freqs):
    n = len(freqs)
    s = validate_spectrum(
        ImpedanceSpectrum(freqs_hz=np.array(freqs), re_ohm=np.zeros(n), im_ohm=np.zeros(n))
    )
    assert (np.diff(log_axis(s)) > 0).all()
