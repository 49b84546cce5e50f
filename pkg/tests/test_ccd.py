import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spucsim.ccd import (CameraSpec, ExposureFrame, LimitReport, dark_frame, detect_in_region,
                         expected_significance, intensity_upper_limit, read_frame, subtract_dark,
                         synthesize_frame, write_frame)
from spucsim.geometry import ScreenGeometry, ScreenPattern

FLAT_QE = ((300.0, 1.0), (1100.0, 1.0))
QUIET = CameraSpec(qe_curve=FLAT_QE, dark_rate=0.0, read_noise=0.0, bias=0.0)


def flat_pattern(value, n=64, wl=700.0):
    screen = ScreenGeometry(pixel_pitch=0.1, width=n, height=n)
    return ScreenPattern(screen, np.full(screen.shape, float(value)), [], wl)


def test_zero_signal_gives_zero_frame():
    frame = synthesize_frame(flat_pattern(0.0), QUIET, 1.0, 2.8, seed=1)
    assert not frame.pixels.any()


def test_noise_free_linearity_in_exposure_and_aperture():
    pat = flat_pattern(100.0)
    one = synthesize_frame(pat, QUIET, 1.0, 2.8, 0, noise=False).pixels
    two = synthesize_frame(pat, QUIET, 2.0, 2.8, 0, noise=False).pixels
    stopped = synthesize_frame(pat, QUIET, 4.0, 5.6, 0, noise=False).pixels
    assert np.array_equal(two, 2 * one)
    assert np.allclose(stopped, one, rtol=1e-12)
    assert one[0, 0] == 100.0


def test_quantum_efficiency_scales_counts():
    cam = CameraSpec(qe_curve=((600.0, 0.5), (800.0, 0.25)), dark_rate=0, read_noise=0, bias=0)
    pat = flat_pattern(100.0, wl=700.0)
    assert synthesize_frame(pat, cam, 1.0, 2.8, 0, noise=False).pixels[0, 0] == pytest.approx(37.5)
    assert synthesize_frame(pat, cam, 1.0, 2.8, 0, noise=False, wavelength=900.0).pixels[0, 0] == 0.0
    assert CameraSpec().qe(np.array([351.0, 633.0, 789.0])).min() >= 0.10


def test_mean_converges_to_expectation():
    # 1e4 pixels at 1e4 expected counts: sample mean within 1%
    frame = synthesize_frame(flat_pattern(1e4, n=100), QUIET, 1.0, 2.8, seed=7)
    assert frame.pixels.mean() == pytest.approx(1e4, rel=0.01)
    assert frame.pixels.std() == pytest.approx(100.0, rel=0.05)


def test_saturation_clamps_at_full_well():
    cam = CameraSpec(qe_curve=FLAT_QE, full_well=1000.0)
    frame = synthesize_frame(flat_pattern(1e6), cam, 1.0, 2.8, seed=3)
    assert frame.pixels.max() == 1000.0
    assert np.all(frame.pixels == 1000.0)


def test_counts_are_non_negative_integers():
    cam = CameraSpec(qe_curve=FLAT_QE, bias=0.0, read_noise=30.0, dark_rate=0.0)
    frame = synthesize_frame(flat_pattern(0.0), cam, 1.0, 2.8, seed=5)
    assert frame.pixels.min() == 0.0
    assert np.array_equal(frame.pixels, np.rint(frame.pixels))


def test_same_seed_same_frame():
    cam = CameraSpec()
    a = synthesize_frame(flat_pattern(50.0), cam, 0.5, 2.8, seed=11)
    b = synthesize_frame(flat_pattern(50.0), cam, 0.5, 2.8, seed=11)
    c = synthesize_frame(flat_pattern(50.0), cam, 0.5, 2.8, seed=12)
    assert np.array_equal(a.pixels, b.pixels)
    assert not np.array_equal(a.pixels, c.pixels)


def test_rows_are_independent_of_frame_height():
    cam = CameraSpec()
    tall = synthesize_frame(flat_pattern(50.0, n=64), cam, 0.5, 2.8, seed=11)
    short_screen = ScreenGeometry(pixel_pitch=0.1, width=64, height=8)
    short = synthesize_frame(ScreenPattern(short_screen, np.full((8, 64), 50.0), [], 700.0),
                             cam, 0.5, 2.8, seed=11)
    assert np.array_equal(tall.pixels[:8], short.pixels)


def test_exposure_bounds():
    cam = CameraSpec(max_exposure=16.0)
    with pytest.raises(ValueError):
        synthesize_frame(flat_pattern(1.0), cam, 0.0, 2.8, 0)
    with pytest.raises(ValueError):
        synthesize_frame(flat_pattern(1.0), cam, 16.5, 2.8, 0)
    with pytest.raises(ValueError):
        synthesize_frame(flat_pattern(1.0), cam, 1.0, 0.0, 0)
    synthesize_frame(flat_pattern(1.0), cam, 16.0, 2.8, 0)


@pytest.mark.parametrize("kwargs", [dict(qe_curve=((500, 0.5), (400, 0.5))), dict(qe_curve=((500, 1.5),)),
                                    dict(full_well=0), dict(read_noise=-1), dict(bias=70000)])
def test_camera_validation(kwargs):
    with pytest.raises(ValueError):
        CameraSpec(**kwargs)


def test_dark_subtraction_removes_bias_and_dark_current():
    cam = CameraSpec()
    shape = (200, 200)
    science = dark_frame(cam, shape, 2.0, 2.8, seed=1)
    dark = dark_frame(cam, shape, 2.0, 2.8, seed=2)
    diff = subtract_dark(science, dark)
    assert diff.dark_subtracted
    assert abs(diff.pixels.mean()) < 0.5
    expected_std = np.sqrt(2 * (cam.dark_rate * 2.0 + cam.read_noise ** 2))
    assert diff.pixels.std() == pytest.approx(expected_std, rel=0.03)


def test_dark_subtraction_guards():
    cam = CameraSpec()
    a = dark_frame(cam, (4, 4), 1.0, 2.8, seed=1)
    with pytest.raises(ValueError):
        subtract_dark(a, dark_frame(cam, (4, 5), 1.0, 2.8, seed=2))
    with pytest.raises(ValueError):
        subtract_dark(a, dark_frame(cam, (4, 4), 2.0, 2.8, seed=2))
    once = subtract_dark(a, dark_frame(cam, (4, 4), 1.0, 2.8, seed=2))
    with pytest.raises(ValueError):
        subtract_dark(once, a)


def _frame(pixels):
    return ExposureFrame(np.asarray(pixels, dtype=float), 1.0, 2.8, True, 0)


def test_detection_strong_and_weak():
    rng = np.random.default_rng(0)
    noise = rng.normal(0.0, 10.0, (200, 200))
    region = np.zeros((200, 200), bool)
    region[90:110, 90:110] = True   # 400 px: sigma of the region mean is 0.5
    strong = noise + 50.0 * region  # 100 sigma
    weak = noise + 0.005 * region   # 0.01 sigma
    ok, s = detect_in_region(_frame(strong), region)
    assert ok and s == pytest.approx(100, rel=0.1)
    ok, s = detect_in_region(_frame(weak), region)
    assert not ok and abs(s) < 3


def test_detection_with_given_sigma_and_background():
    px = np.zeros((10, 10))
    px[:2] = 1.0
    region = np.zeros_like(px, bool)
    region[:2] = True
    bg = np.zeros_like(region)
    bg[5:] = True
    ok, s = detect_in_region(_frame(px), region, noise_sigma_estimate=1.0, background=bg)
    assert s == pytest.approx(np.sqrt(20))
    assert not ok


def test_detection_zero_noise():
    region = np.zeros((4, 4), bool)
    region[0] = True
    assert detect_in_region(_frame(np.zeros((4, 4))), region) == (False, 0.0)
    px = np.zeros((4, 4))
    px[0] = 1
    assert detect_in_region(_frame(px), region) == (True, np.inf)


def test_detection_requires_dark_subtracted_and_nonempty_region():
    raw = ExposureFrame(np.ones((4, 4)), 1.0, 2.8)
    region = np.ones((4, 4), bool)
    with pytest.raises(ValueError):
        detect_in_region(raw, region)
    with pytest.raises(ValueError):
        detect_in_region(_frame(np.ones((4, 4))), np.zeros((4, 4), bool))
    with pytest.raises(ValueError):
        detect_in_region(_frame(np.ones((4, 4))), region)


@pytest.mark.parametrize("detect, null, ratio", [
    ((0.1, 2.8), (16.0, 2.8), 160.0),
    ((1.0, 2.8), (1.0, 2.8), 1.0),
    ((0.1, 2.8), (16.0, 1.4), 640.0),
    ((1 / 30, 2.8), (0.5, 2.8), 15.0),
])
def test_limit_examples(detect, null, ratio):
    report = intensity_upper_limit(detect, null, False)
    assert report.ratio_limit == pytest.approx(ratio, rel=1e-12)
    assert report.summary() == f"I_SPUC < I_SPDC / {ratio:g}"


def test_no_limit_when_null_shows_signal():
    report = intensity_upper_limit((0.1, 2.8), (16.0, 2.8), True, significance=42.0)
    assert report.ratio_limit is None
    assert "detected" in report.summary()
    with pytest.raises(ValueError):
        LimitReport(0.1, 16, 2.8, 2.8, True, 160.0)


@settings(max_examples=200)
@given(t=st.floats(1e-3, 10), n=st.floats(1, 22), k=st.floats(1.01, 100))
def test_limit_monotone_in_null_exposure(t, n, k):
    base = intensity_upper_limit((t, n), (t, n), False).ratio_limit
    longer = intensity_upper_limit((t, n), (k * t, n), False).ratio_limit
    assert base == pytest.approx(1.0)
    assert longer > base


def test_expected_significance():
    cam = CameraSpec(dark_rate=0, read_noise=0)
    assert expected_significance(4.0, 100, cam, 1.0) == pytest.approx(20.0)
    assert expected_significance(0.0, 100, cam, 1.0) == 0.0


def test_pgm_round_trip(tmp_path):
    frame = synthesize_frame(flat_pattern(300.0, n=16), CameraSpec(), 1.0, 2.8, seed=4)
    path = write_frame(frame, tmp_path / "a.pgm")
    data = path.read_bytes()
    assert data.startswith(b"P5\n16 16\n65535\n")
    assert len(data) == len(b"P5\n16 16\n65535\n") + 2 * 256
    back = read_frame(path)
    assert np.array_equal(back.pixels, frame.pixels)
    assert (back.exposure, back.f_stop, back.rng_seed, back.dark_subtracted) == (1.0, 2.8, 4, False)


def test_pgm_round_trip_negative_values(tmp_path):
    px = np.array([[-5.0, 0.0], [3.0, 7.0]])
    frame = ExposureFrame(px, 1 / 30, 2.8, True, None)
    path = write_frame(frame, tmp_path / "d.pgm")
    assert "pedestal = 5" in (tmp_path / "d.pgm.meta").read_text()
    back = read_frame(path)
    assert np.array_equal(back.pixels, px)
    assert back.exposure == 1 / 30 and back.dark_subtracted and back.rng_seed is None


def test_pgm_rejects_fractional_and_overflow(tmp_path):
    with pytest.raises(ValueError):
        write_frame(ExposureFrame(np.array([[0.5]]), 1.0, 2.8), tmp_path / "x.pgm")
    with pytest.raises(ValueError):
        write_frame(ExposureFrame(np.array([[70000.0]]), 1.0, 2.8), tmp_path / "x.pgm")
