import math

import numpy as np
import pytest

from spucsim.dispersion import CrystalSpec, load_dispersion
from spucsim.geometry import (FWHM_TO_SIGMA, RingFeature, ScreenGeometry, feature_mask, radial_profile,
                              render_pattern, screen_point, spdc_ring, spdc_ring_pair, spot_feature, spuc_arcs)
from spucsim.kinematics import (BeamSpec, direction_from_angles, exit_beam, idler_wavelength,
                                solve_emission_angles, stimulated_direction)

import oracles

Z = np.array([0.0, 0.0, 1.0])


@pytest.fixture(scope="module")
def crystal():
    return CrystalSpec(load_dispersion("liio3"), 51.0)


@pytest.fixture(scope="module")
def pump():
    return BeamSpec(351.0, direction_from_angles(2.0, 180.0))


@pytest.fixture(scope="module")
def small():
    return ScreenGeometry(distance=500, pixel_pitch=0.2, width=600, height=600)


def test_screen_defaults_and_pixel_mapping():
    s = ScreenGeometry()
    assert s.origin == (511.5, 511.5)
    assert s.to_pixel((0.0, 0.0)) == s.origin
    assert s.to_pixel((1.0, -0.5)) == (511.5 - 10, 511.5 + 20)
    x, y = s.coordinates()
    assert x.shape == (1024, 1024)
    assert x[0, 1] - x[0, 0] == pytest.approx(0.05)
    assert y[1, 0] - y[0, 0] == pytest.approx(0.05)


@pytest.mark.parametrize("kwargs", [dict(distance=0), dict(pixel_pitch=-1), dict(width=0),
                                    dict(origin=(-1.0, 0.0))])
def test_screen_validation(kwargs):
    with pytest.raises(ValueError):
        ScreenGeometry(**kwargs)


def test_feature_validation():
    with pytest.raises(ValueError):
        RingFeature(700, (0, 0), -1)
    with pytest.raises(ValueError):
        RingFeature(700, (0, 0), 1, arc_span=(1.0, 0.0))
    with pytest.raises(ValueError):
        RingFeature(700, (0, 0), 1, relative_intensity=-0.1)


def test_screen_point_of_pump_is_origin():
    p = direction_from_angles(3.0, 40.0)
    assert screen_point(p, p, ScreenGeometry()) == (0.0, 0.0)
    with pytest.raises(ValueError):
        screen_point(-Z, Z, ScreenGeometry())


def test_normal_incidence_ring_radius_against_oracle(crystal):
    # beyond the normal-incidence tuning edge the ring is centred on the pump
    screen = ScreenGeometry()
    ring = spdc_ring(crystal, BeamSpec(351.0, Z), 900.0, screen)
    (t2, _, _), _ = oracles.tuning_point(51.0, 0.0, 351.0, 900.0)
    ext = math.asin(oracles.sellmeier(oracles.LIIO3_O, 900.0) * math.sin(t2))
    assert ring.radius == pytest.approx(500 * math.tan(ext), rel=1e-9)
    assert ring.center == pytest.approx((0.0, 0.0), abs=1e-9)


def test_tilted_pump_ring_near_pump_spot(crystal, pump):
    ring = spdc_ring(crystal, pump, 789.0, ScreenGeometry())
    assert 40 < ring.radius < 50
    assert math.hypot(*ring.center) < 0.2
    assert abs(ring.center[1]) < 1e-12


def test_conjugate_rings_are_nested(crystal, pump):
    sig, idl = spdc_ring_pair(crystal, pump, 789.0, ScreenGeometry())
    assert idl.wavelength == pytest.approx(idler_wavelength(351, 789))
    assert idl.radius < sig.radius
    # both rings share the pump spot as centre to within a fraction of a mm
    assert math.dist(sig.center, idl.center) < 0.2


def test_injected_and_stimulated_spots_on_rings(crystal, pump):
    screen = ScreenGeometry()
    sol = solve_emission_angles(crystal, pump, 789.0)
    seed = exit_beam(sol.signal, crystal)
    stim = stimulated_direction(pump, seed, crystal)
    sig, idl = spdc_ring_pair(crystal, pump, 789.0, screen)
    s_pt = screen_point(seed.direction, pump.direction, screen)
    i_pt = screen_point(stim.external.direction, pump.direction, screen)
    # agreement limited by the 1e-10 rad solver tolerance times the 500 mm throw
    assert math.dist(s_pt, sig.center) == pytest.approx(sig.radius, abs=1e-6)
    assert math.dist(i_pt, idl.center) == pytest.approx(idl.radius, abs=1e-6)
    assert s_pt[0] * i_pt[0] < 0


def test_render_empty_pattern(small):
    pat = render_pattern([], small, 0.4)
    assert not pat.irradiance.any()
    assert pat.effective_wavelength is None


def test_render_is_linear(small):
    a = RingFeature(700.0, (0.0, 0.0), 20.0)
    b = RingFeature(760.0, (1.0, 0.0), 35.0, relative_intensity=0.3)
    sep = render_pattern([a], small, 0.8).irradiance + render_pattern([b], small, 0.8).irradiance
    both = render_pattern([a, b], small, 0.8).irradiance
    assert np.allclose(both, sep, rtol=1e-12, atol=0)
    doubled = render_pattern([a.scaled(2.0)], small, 0.8).irradiance
    assert np.allclose(doubled, 2 * render_pattern([a], small, 0.8).irradiance, rtol=1e-12, atol=0)


def test_effective_wavelength_weighted(small):
    pat = render_pattern([spot_feature((0, 0), 600.0, 1.0, width=2), spot_feature((30, 0), 800.0, 3.0, width=2)],
                         small, 0.4)
    assert pat.effective_wavelength == pytest.approx(750.0, rel=1e-6)


def test_ring_profile_width(small):
    pat = render_pattern([RingFeature(700, (0.0, 0.0), 30.0)], small, 2.0)
    x, y = small.coordinates()
    row = int(round(small.origin[0]))
    line = pat.irradiance[row]
    xs = x[row]
    rs = np.hypot(xs, y[row])
    near = (xs > 25) & (xs < 35)
    assert line[near].max() == pytest.approx(1.0, abs=0.02)
    sigma = 2.0 * FWHM_TO_SIGMA
    expect = np.exp(-0.5 * ((rs[near] - 30.0) / sigma) ** 2)
    assert np.allclose(line[near], expect, atol=1e-9)


def test_radial_profile_peaks_at_ring_radii(small):
    rings = [RingFeature(700, (0.0, 0.0), 20.0), RingFeature(800, (0.0, 0.0), 42.0)]
    pat = render_pattern(rings, small, 0.8)
    r, prof = radial_profile(pat.irradiance, small)
    for ring in rings:
        window = np.abs(r - ring.radius) < 4
        peak = r[window][np.argmax(prof[window])]
        assert abs(peak - ring.radius) <= small.pixel_pitch


def test_arc_only_lights_its_span(small):
    arc = RingFeature(700, (0.0, 0.0), 30.0, arc_span=(0.0, math.pi / 2), width=1.0)
    img = render_pattern([arc], small, 1.0).irradiance
    r, c = small.to_pixel((30.0 * math.cos(0.7), 30.0 * math.sin(0.7)))
    assert img[round(r), round(c)] > 0.9
    r, c = small.to_pixel((-30.0, 0.0))
    assert img[round(r), round(c)] < 1e-12


def test_feature_mask(small):
    ring = RingFeature(700, (0.0, 0.0), 30.0)
    mask = feature_mask([ring], small, 1.0)
    x, y = small.coordinates()
    d = np.abs(np.hypot(x, y) - 30.0)
    assert np.all(mask[d < 0.49])
    assert not np.any(mask[d > 0.51])


# -- SPUC arcs ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def arcs_789(crystal, pump):
    screen = ScreenGeometry()
    sol = solve_emission_angles(crystal, pump, 789.0)
    seed = exit_beam(sol.signal, crystal)
    stim = stimulated_direction(pump, seed, crystal)
    spot = screen_point(stim.external.direction, pump.direction, screen)
    arcs = spuc_arcs(crystal, seed, (0.0, 0.0), spot, 9, screen, pump_wavelength=351.0)
    return screen, spot, arcs


def _distance_to_arc(arc, point, n=20001):
    return float(np.min(np.hypot(*(arc.points(n) - np.asarray(point)).T)))


def test_spuc_arcs_pass_through_anchors(arcs_789):
    screen, spot, arcs = arcs_789
    assert arcs[0].wavelength == pytest.approx(351.0)
    assert arcs[-1].wavelength == pytest.approx(idler_wavelength(351, 789))
    assert _distance_to_arc(arcs[0], (0.0, 0.0)) < 0.5 * screen.pixel_pitch
    assert _distance_to_arc(arcs[-1], spot) < 0.5 * screen.pixel_pitch


def test_spuc_arcs_stay_between_anchors(arcs_789):
    screen, spot, arcs = arcs_789
    u = np.asarray(spot) / math.hypot(*spot)
    sep = math.hypot(*spot)
    for arc in arcs:
        assert arc.kind == "spuc" and not arc.full_circle
        along = arc.points(500) @ u
        assert along.min() >= -1e-9 and along.max() <= sep + 1e-9


def test_spuc_arc_wavelengths_monotone_in_frequency(arcs_789):
    nu = [1 / a.wavelength for a in arcs_789[2]]
    assert np.allclose(np.diff(nu), np.diff(nu)[0], rtol=1e-12)
    assert np.all(np.diff(nu) < 0)


def test_spuc_zero_ratio_renders_nothing(crystal, pump, arcs_789):
    screen, spot, _ = arcs_789
    seed = BeamSpec(789.0, Z)
    arcs = spuc_arcs(crystal, seed, (0.0, 0.0), spot, 5, screen, pump_wavelength=351.0, ratio=0.0)
    assert not render_pattern(arcs, screen, 0.4).irradiance.any()


def test_spuc_rejects_degenerate_input(crystal, arcs_789):
    screen, spot, _ = arcs_789
    seed = BeamSpec(789.0, Z)
    with pytest.raises(ValueError):
        spuc_arcs(crystal, seed, (0.0, 0.0), (0.0, 0.0), 5, screen, pump_wavelength=351.0)
    with pytest.raises(ValueError):
        spuc_arcs(crystal, seed, (0.0, 0.0), spot, 1, screen, pump_wavelength=351.0)
    with pytest.raises(ValueError):
        spuc_arcs(crystal, seed, (0.0, 0.0), spot, 5, screen, pump_wavelength=351.0, ratio=-1)


# -- ring continuity ------------------------------------------------------------------

def _radii(crystal, pump, wls, screen):
    return np.array([spdc_ring(crystal, pump, float(w), screen).radius for w in wls])


def test_ring_radius_continuous_near_degeneracy(crystal, pump):
    # 1 nm steps move the ring by at most 2 px close to degeneracy
    screen = ScreenGeometry()
    jumps = np.abs(np.diff(_radii(crystal, pump, np.arange(700.0, 711.0, 1.0), screen))) / screen.pixel_pitch
    assert jumps.max() <= 2.0


def test_ring_radius_continuous_over_tuning_range(crystal, pump):
    # the cone opens fast in the infrared, so the full range is checked at a finer step
    screen = ScreenGeometry()
    jumps = np.abs(np.diff(_radii(crystal, pump, np.arange(700.0, 1100.01, 0.1), screen))) / screen.pixel_pitch
    assert jumps.max() <= 2.0


def test_two_arcs_are_just_the_anchor_arcs(crystal, arcs_789):
    screen, spot, _ = arcs_789
    seed = BeamSpec(789.0, Z)
    arcs = spuc_arcs(crystal, seed, (0.0, 0.0), spot, 2, screen, pump_wavelength=351.0)
    assert len(arcs) == 2
    assert _distance_to_arc(arcs[0], (0.0, 0.0)) < 0.5 * screen.pixel_pitch
    assert _distance_to_arc(arcs[1], spot) < 0.5 * screen.pixel_pitch
    # off-centre with respect to the pump spot
    assert all(math.hypot(*a.center) > 1.0 for a in arcs)
