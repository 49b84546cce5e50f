"""
Scenario files and the end-to-end detect / null exposure pipeline.

A scenario is an INI document::

    [scenario]
    name = argon789
    seed = 20021
    spuc_ratio = 0            # SPUC/SPDC intensity ratio to inject

    [crystal]
    dispersion = liio3        # shipped table name or path
    cut_angle_deg = 51
    length_mm = 10

    [pump]                    # optional; pump-on (SPDC) exposures need it
    wavelength_nm = 351
    incidence_deg = 2.0       # external polar angle from the face normal
    azimuth_deg = 180         # 0 = towards the optic axis side (+x)
    power_mw = 50

    [injected]                # optional
    wavelength_nm = 789
    incidence_deg = matched   # or a number; "matched" = phase-matched seed angle
    azimuth_deg = 0
    power_mw = 50

    [screen]
    distance_mm = 500
    pixel_pitch_mm = 0.1
    width = 1024
    height = 1024
    origin = 511.5, 511.5     # optional (row, col) of the pump spot

    [camera]                  # every key optional
    full_well = 65535
    dark_rate = 20
    read_noise = 10
    bias = 200
    max_exposure = 16
    qe = 350:0.10, 400:0.18, ...

    [exposures]
    detect = 0.1 @ 2.8        # seconds @ f-number; comma separated; 1/30 allowed
    null = 16 @ 2.8

    [pattern]                 # every key optional
    spdc_wavelengths = 702, 730, 760, 789
    ring_width_mm = 0.4
    n_arcs = 9
    arc_span_deg = 180
    calibration_sigma = 8
    detection_threshold = 5
    injected_spot_intensity = 2000
    stimulated_spot_intensity = 20
    spot_width_mm = 1.0
    background_amplitude = 0
    background_width_mm = 20

Intensities in ``[pattern]`` are relative to the peak of one SPDC ring.  The
absolute SPDC brightness is set so that the SPDC rings in the shortest detect
exposure reach ``calibration_sigma`` in the region test: SPDC is just
"clearly visible" there, and the detect/null exposure ratio then carries the
whole limit.
"""
from __future__ import annotations

import configparser
import math
import re
import zlib
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import ccd
from .ccd import CameraSpec, ExposureFrame, LimitReport
from .dispersion import CrystalSpec, DispersionError, load_dispersion
from .geometry import (ScreenGeometry, feature_mask, radial_profile, render_pattern, screen_point,
                       spdc_ring_pair, spot_feature, spuc_arcs)
from .kinematics import (BeamSpec, PhaseMatchError, direction_from_angles, exit_beam, idler_wavelength,
                         solve_emission_angles, stimulated_direction)

__all__ = [
    "ScenarioError",
    "PatternSettings",
    "Scenario",
    "RunResult",
    "load_scenario",
    "shipped_scenarios",
    "run_scenario",
    "emit_outputs",
]


class ScenarioError(ValueError):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class PatternSettings:
    spdc_wavelengths: tuple = (702.0, 730.0, 760.0, 789.0)
    ring_width: float = 0.4
    n_arcs: int = 9
    arc_span: float = math.pi
    arc_offset: float | None = None
    calibration_sigma: float = 8.0
    detection_threshold: float = ccd.DETECTION_THRESHOLD
    injected_spot_intensity: float = 2000.0
    stimulated_spot_intensity: float = 20.0
    spot_width: float = 1.0
    background_amplitude: float = 0.0
    background_width: float = 20.0


@dataclass(frozen=True)
class Scenario:
    name: str
    crystal: CrystalSpec
    screen: ScreenGeometry
    camera: CameraSpec
    detect_exposures: tuple
    null_exposures: tuple
    pump: BeamSpec | None = None
    injected: BeamSpec | None = None
    spuc_ratio: float = 0.0
    seed: int = 0
    pattern: PatternSettings = field(default_factory=PatternSettings)

    @property
    def exposures(self):
        return self.detect_exposures + self.null_exposures

    def validate(self):
        if self.pump is None and self.injected is None:
            raise ScenarioError("scenario needs at least one beam ([pump] or [injected])")
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", self.name):
            raise ScenarioError(f"[scenario] name: {self.name!r} is not usable in file names")
        if not self.detect_exposures or not self.null_exposures:
            raise ScenarioError("[exposures]: need at least one detect and one null exposure")
        for t, n in self.exposures:
            if not (0 < t <= self.camera.max_exposure):
                raise ScenarioError(
                    f"[exposures]: {t:g} s outside (0, {self.camera.max_exposure:g}] s camera range")
            if not n > 0:
                raise ScenarioError(f"[exposures]: f-number must be positive, got {n}")
        if not self.spuc_ratio >= 0:
            raise ScenarioError(f"[scenario] spuc_ratio: must be non-negative, got {self.spuc_ratio}")
        if self.injected is not None and self.pump is not None and self.injected.wavelength <= self.pump.wavelength:
            raise ScenarioError("[injected] wavelength_nm: must exceed the pump wavelength")
        if self.pattern.n_arcs < 2:
            raise ScenarioError("[pattern] n_arcs: need at least 2")
        return self


# -- parsing ------------------------------------------------------------------------

def _field(section, key):
    return f"[{section}] {key}"


def _float(parser, section, key, default=None):
    if not parser.has_option(section, key):
        if default is None:
            raise ScenarioError(f"{_field(section, key)}: missing")
        return default
    text = parser.get(section, key)
    try:
        return float(Fraction(text.strip())) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise ScenarioError(f"{_field(section, key)}: {text!r} is not a number") from None


def _int(parser, section, key, default=None):
    value = _float(parser, section, key, None if default is None else float(default))
    if value != int(value):
        raise ScenarioError(f"{_field(section, key)}: expected an integer, got {value}")
    return int(value)


def _floats(parser, section, key):
    text = parser.get(section, key)
    try:
        return tuple(float(v) for v in re.split(r"[,\s]+", text.strip()) if v)
    except ValueError:
        raise ScenarioError(f"{_field(section, key)}: {text!r} is not a list of numbers") from None


def _exposures(parser, key):
    if not parser.has_option("exposures", key):
        raise ScenarioError(f"{_field('exposures', key)}: missing")
    out = []
    for item in parser.get("exposures", key).split(","):
        m = re.fullmatch(r"\s*([0-9./eE+-]+)\s*(?:s\s*)?@\s*f?/?\s*([0-9.eE+-]+)\s*", item)
        if m is None:
            raise ScenarioError(f"{_field('exposures', key)}: cannot parse {item.strip()!r}; expected '<seconds> @ <f-number>'")
        try:
            t = float(Fraction(m.group(1)))
            n = float(m.group(2))
        except (ValueError, ZeroDivisionError):
            raise ScenarioError(f"{_field('exposures', key)}: cannot parse {item.strip()!r}") from None
        out.append((t, n))
    return tuple(out)


def _qe(text):
    pts = []
    for item in text.split(","):
        try:
            wl, q = item.split(":")
            pts.append((float(wl), float(q)))
        except ValueError:
            raise ScenarioError(f"[camera] qe: cannot parse {item.strip()!r}; expected '<nm>:<fraction>'") from None
    return tuple(pts)


def _beam(parser, section, crystal, pump):
    wl = _float(parser, section, "wavelength_nm")
    power = _float(parser, section, "power_mw", 0.0)
    azimuth = _float(parser, section, "azimuth_deg", 0.0)
    incidence = parser.get(section, "incidence_deg", fallback="0").strip().lower()
    try:
        if incidence == "matched":
            if pump is None:
                raise ScenarioError(f"{_field(section, 'incidence_deg')}: 'matched' needs a [pump] section")
            sol = solve_emission_angles(crystal, pump, wl, math.radians(azimuth))
            direction = exit_beam(sol.signal, crystal).direction
        else:
            direction = direction_from_angles(_float(parser, section, "incidence_deg"), azimuth)
        return BeamSpec(wl, direction, power)
    except DispersionError as exc:
        raise ScenarioError(f"{_field(section, 'incidence_deg')}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, (ScenarioError, PhaseMatchError)):
            raise
        raise ScenarioError(f"[{section}]: {exc}") from exc


def load_scenario(source, base_dir=None) -> Scenario:
    """Parse and validate a scenario from a path, shipped name or document text."""
    text, base = _scenario_text(source)
    base_dir = Path(base_dir) if base_dir is not None else base
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"could not parse scenario: {exc}") from None
    for section in ("scenario", "crystal", "screen", "exposures"):
        if not parser.has_section(section):
            raise ScenarioError(f"[{section}]: section missing")

    disp = parser.get("crystal", "dispersion", fallback="liio3").strip()
    if base_dir is not None and (base_dir / disp).exists():
        disp = base_dir / disp
    try:
        model = load_dispersion(disp)
        crystal = CrystalSpec(model, _float(parser, "crystal", "cut_angle_deg"),
                              _float(parser, "crystal", "length_mm", 10.0))
    except DispersionError as exc:
        raise ScenarioError(f"[crystal]: {exc}") from exc

    try:
        origin = None
        if parser.has_option("screen", "origin"):
            origin = _floats(parser, "screen", "origin")
            if len(origin) != 2:
                raise ScenarioError("[screen] origin: expected 'row, col'")
        screen = ScreenGeometry(
            _float(parser, "screen", "distance_mm", 500.0),
            _float(parser, "screen", "pixel_pitch_mm", 0.05),
            _int(parser, "screen", "width", 1024),
            _int(parser, "screen", "height", 1024),
            origin,
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"[screen]: {exc}") from exc

    cam = {}
    if parser.has_section("camera"):
        for key in ("full_well", "dark_rate", "read_noise", "bias", "max_exposure"):
            if parser.has_option("camera", key):
                cam[key] = _float(parser, "camera", key)
        if parser.has_option("camera", "qe"):
            cam["qe_curve"] = _qe(parser.get("camera", "qe"))
    try:
        camera = CameraSpec(**cam)
    except ValueError as exc:
        raise ScenarioError(f"[camera]: {exc}") from exc

    pump = _beam(parser, "pump", crystal, None) if parser.has_section("pump") else None
    injected = _beam(parser, "injected", crystal, pump) if parser.has_section("injected") else None

    defaults = PatternSettings()
    ps = {}
    if parser.has_section("pattern"):
        sec = "pattern"
        if parser.has_option(sec, "spdc_wavelengths"):
            ps["spdc_wavelengths"] = _floats(parser, sec, "spdc_wavelengths")
        for key, attr in (("ring_width_mm", "ring_width"), ("calibration_sigma", "calibration_sigma"),
                          ("detection_threshold", "detection_threshold"),
                          ("injected_spot_intensity", "injected_spot_intensity"),
                          ("stimulated_spot_intensity", "stimulated_spot_intensity"),
                          ("spot_width_mm", "spot_width"), ("background_amplitude", "background_amplitude"),
                          ("background_width_mm", "background_width"), ("arc_offset_mm", "arc_offset")):
            if parser.has_option(sec, key):
                ps[attr] = _float(parser, sec, key)
        if parser.has_option(sec, "n_arcs"):
            ps["n_arcs"] = _int(parser, sec, "n_arcs")
        if parser.has_option(sec, "arc_span_deg"):
            ps["arc_span"] = math.radians(_float(parser, sec, "arc_span_deg"))
    pattern = replace(defaults, **ps)

    scenario = Scenario(
        name=parser.get("scenario", "name", fallback="").strip() or "scenario",
        crystal=crystal,
        screen=screen,
        camera=camera,
        detect_exposures=_exposures(parser, "detect"),
        null_exposures=_exposures(parser, "null"),
        pump=pump,
        injected=injected,
        spuc_ratio=_float(parser, "scenario", "spuc_ratio", 0.0),
        seed=_int(parser, "scenario", "seed", 0),
        pattern=pattern,
    )
    return scenario.validate()


def _scenario_text(source):
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and "[" not in source):
        path = Path(source)
        if path.exists():
            return path.read_text(), path.parent
        shipped = _shipped_dir() / f"{source}.ini"
        if not isinstance(source, Path) and shipped.is_file():
            return shipped.read_text(), shipped.parent
        raise ScenarioError(f"no scenario file or shipped scenario named {str(source)!r}")
    return source, None


def _shipped_dir():
    from importlib import resources
    return Path(str(resources.files("spucsim") / "data" / "scenarios"))


def shipped_scenarios():
    """Names of the scenarios bundled with the package."""
    return sorted(p.stem for p in _shipped_dir().glob("*.ini"))


# -- running ------------------------------------------------------------------------

@dataclass
class RunResult:
    scenario: Scenario
    features: list
    spuc_features: list
    raw: dict
    darks: dict
    subtracted: dict
    significance: dict
    report: LimitReport
    irradiance_scale: float
    stimulated: object = None
    regions: dict = field(default_factory=dict)


def frame_seed(seed: int, label: str) -> int:
    """Per-frame seed derived from the scenario seed and a stable frame label."""
    state = np.random.SeedSequence([int(seed), zlib.crc32(label.encode())]).generate_state(2, np.uint64)
    return int(state[0]) | (int(state[1]) << 64)


def _exposure_label(kind, t, n, all_exposures):
    label = f"{kind}_{t:g}s"
    if sum(1 for tt, _ in all_exposures if tt == t) > 1:
        label += f"_f{n:g}"
    return label


def run_scenario(scenario: Scenario) -> RunResult:
    """Expose pump-on (SPDC) and pump-off (SPUC search) frames and derive the limit."""
    sc = scenario.validate()
    ps, screen, camera, crystal = sc.pattern, sc.screen, sc.camera, sc.crystal
    pump, injected = sc.pump, sc.injected

    rings = []
    if pump is not None:
        for wl in ps.spdc_wavelengths:
            a, b = spdc_ring_pair(crystal, pump, wl, screen)
            rings.append(a)
            if abs(b.wavelength - a.wavelength) > 1e-6:
                rings.append(b)

    spots, exclude = [], []
    stim = None
    spuc = []
    collinear = False
    if injected is not None:
        ref_dir = pump.direction if pump is not None else np.array([0.0, 0.0, 1.0])
        inj_pt = screen_point(injected.direction, ref_dir, screen)
        spots.append(spot_feature(inj_pt, injected.wavelength, ps.injected_spot_intensity, "injected", ps.spot_width))
        exclude.append(spots[-1])
        if pump is not None:
            stim = stimulated_direction(pump, injected, crystal)
            stim_pt = screen_point(stim.external.direction, pump.direction, screen)
            stim_spot = spot_feature(stim_pt, stim.external.wavelength, ps.stimulated_spot_intensity,
                                     "stimulated", ps.spot_width)
            exclude.append(stim_spot)
            if math.hypot(*stim_pt) <= 0.5 * screen.pixel_pitch:
                collinear = True
            else:
                spuc = spuc_arcs(crystal, injected, (0.0, 0.0), stim_pt, ps.n_arcs, screen,
                                 pump_wavelength=pump.wavelength, ratio=1.0, arc_span=ps.arc_span,
                                 offset=ps.arc_offset)
    background = []
    if injected is not None and ps.background_amplitude > 0:
        background.append(spot_feature((0.0, 0.0), injected.wavelength, ps.background_amplitude,
                                       "background", ps.background_width))

    keep_out = feature_mask(exclude, screen, ps.spot_width, level=1e-6) \
        if exclude else np.zeros(screen.shape, bool)
    spdc_region = feature_mask(rings, screen, ps.ring_width) & ~keep_out
    spuc_region = feature_mask(spuc, screen, ps.ring_width) & ~keep_out
    background_px = ~keep_out

    on_features = rings + ([stim_spot] if stim is not None else []) + spots[:1] + background
    on_pattern = render_pattern(on_features, screen, ps.ring_width) if pump is not None else None

    scale = 1.0
    t0, n0 = min(sc.detect_exposures, key=lambda e: e[0] / e[1] ** 2)
    if on_pattern is not None and spdc_region.any():
        ring_only = render_pattern(rings, screen, ps.ring_width).irradiance
        mean_t = float(ring_only[spdc_region].mean())
        npx = int(spdc_region.sum())
        gain = float(camera.qe(on_pattern.effective_wavelength)) * t0 * (ccd.F_REF / n0) ** 2
        target = ps.calibration_sigma
        v = camera.dark_rate * t0 + camera.read_noise**2
        # solve  s sqrt(N) = T sqrt(s + 2 v)  for the mean signal s
        s = (target**2 + math.sqrt(target**4 + 8.0 * npx * target**2 * v)) / (2.0 * npx)
        scale = s / (mean_t * gain)

    off_features = [f.scaled(sc.spuc_ratio) for f in spuc] + spots[:1] + background
    off_pattern = render_pattern(off_features, screen, ps.ring_width)
    if off_pattern.effective_wavelength is None and spuc:
        off_pattern.effective_wavelength = float(np.mean([f.wavelength for f in spuc]))

    raw, darks, subtracted, significance = {}, {}, {}, {}
    spdc_hits = []
    if on_pattern is not None:
        on_pattern.irradiance *= scale
        for t, n in sc.detect_exposures:
            label = _exposure_label("spdc", t, n, sc.detect_exposures)
            frame = ccd.synthesize_frame(on_pattern, camera, t, n, frame_seed(sc.seed, label))
            dark = ccd.dark_frame(camera, screen.shape, t, n, frame_seed(sc.seed, label + "_dark"))
            sub = ccd.subtract_dark(frame, dark)
            raw[label], darks[label], subtracted[label] = frame, dark, sub
            if spdc_region.any():
                hit, sig = ccd.detect_in_region(sub, spdc_region, threshold=ps.detection_threshold,
                                                background=background_px)
                significance[label] = sig
                if hit:
                    spdc_hits.append((t, n))
    off_pattern.irradiance *= scale
    null_results = []
    for t, n in sc.null_exposures:
        label = _exposure_label("null", t, n, sc.null_exposures)
        frame = ccd.synthesize_frame(off_pattern, camera, t, n, frame_seed(sc.seed, label))
        dark = ccd.dark_frame(camera, screen.shape, t, n, frame_seed(sc.seed, label + "_dark"))
        sub = ccd.subtract_dark(frame, dark)
        raw[label], darks[label], subtracted[label] = frame, dark, sub
        if spuc_region.any():
            hit, sig = ccd.detect_in_region(sub, spuc_region, threshold=ps.detection_threshold,
                                            background=background_px)
            significance[label] = sig
            null_results.append((t, n, hit, sig))

    notes = []
    if collinear:
        notes.append("stimulated beam lands on the pump spot; SPUC arcs are undefined")
    if spdc_hits:
        detect = min(spdc_hits, key=lambda e: e[0] / e[1] ** 2)
    else:
        detect = (t0, n0)
        notes.append("SPDC was not detected in any detect exposure; limit uses the configured exposure")
    hits = [r for r in null_results if r[2]]
    if hits:
        best = max(hits, key=lambda r: r[3])
        report = ccd.intensity_upper_limit(detect, best[:2], True, best[3])
    else:
        if null_results:
            best = max(null_results, key=lambda r: r[0] / r[1] ** 2)
            null, sig = best[:2], best[3]
        else:
            null, sig = max(sc.null_exposures, key=lambda e: e[0] / e[1] ** 2), None
            notes.append("no SPUC region on screen; null frames were not tested")
        report = ccd.intensity_upper_limit(detect, null, False, sig)
    report.notes.extend(notes)

    return RunResult(sc, rings + spots + ([stim_spot] if stim is not None else []) + background, spuc,
                     raw, darks, subtracted, significance, report, scale, stim,
                     {"spdc": spdc_region, "spuc": spuc_region, "background": background_px})


# -- output -------------------------------------------------------------------------

def _feature_table(result: RunResult) -> str:
    lines = ["# kind\twavelength_nm\tcenter_x_mm\tcenter_y_mm\tradius_mm\tradius_px\tarc_start_rad\tarc_stop_rad\trelative_intensity"]
    pitch = result.scenario.screen.pixel_pitch
    ratio = result.scenario.spuc_ratio
    for f in result.features + [a.scaled(ratio) for a in result.spuc_features]:
        lines.append("\t".join([
            f.kind, f"{f.wavelength:.4f}", f"{f.center[0]:.6f}", f"{f.center[1]:.6f}", f"{f.radius:.6f}",
            f"{f.radius / pitch:.3f}", f"{f.arc_span[0]:.6f}", f"{f.arc_span[1]:.6f}", f"{f.relative_intensity:.6g}",
        ]))
    return "\n".join(lines) + "\n"


def _report_text(result: RunResult) -> str:
    sc, rep = result.scenario, result.report
    out = [f"scenario = {sc.name}", f"seed = {sc.seed}", f"spuc_ratio = {sc.spuc_ratio:g}"]
    if sc.pump is not None:
        out.append(f"pump = {sc.pump.wavelength:g} nm, {sc.pump.power:g} mW")
    if sc.injected is not None:
        out.append(f"injected = {sc.injected.wavelength:g} nm, {sc.injected.power:g} mW")
    if result.stimulated is not None:
        st = result.stimulated
        out.append(f"stimulated = {st.external.wavelength:.3f} nm, k mismatch {st.mismatch:.3e}"
                   f" ({'phase matched' if st.matched else 'NOT phase matched'})")
    out.append(f"irradiance_scale = {result.irradiance_scale:.6g}")
    for label in sorted(result.significance):
        out.append(f"significance[{label}] = {result.significance[label]:.3f}")
    out.append(f"detect = {rep.detect_exposure:g} s @ f/{rep.detect_stop:g}")
    out.append(f"null = {rep.null_exposure:g} s @ f/{rep.null_stop:g}")
    out.append(f"detected_in_null = {str(rep.detected_in_null).lower()}")
    out.append(f"ratio_limit = {rep.ratio_limit:g}" if rep.ratio_limit is not None else "ratio_limit = none")
    out.append(f"result = {rep.summary()}")
    for note in rep.notes:
        out.append(f"note = {note}")
    return "\n".join(out) + "\n"


def emit_outputs(result: RunResult, out_dir) -> list[Path]:
    """Write frames, dark frames, radial profiles, the feature table and the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = result.scenario.name
    written = []
    for label, frame in result.raw.items():
        written.append(ccd.write_frame(frame, out / f"{name}_{label}.pgm"))
        written.append(ccd.write_frame(result.darks[label], out / f"{name}_{label}_dark.pgm"))
        if label.startswith("spdc"):
            r, prof = radial_profile(result.subtracted[label].pixels, result.scenario.screen)
            lines = ["# radius_mm\tradius_px\tmean_counts"]
            pitch = result.scenario.screen.pixel_pitch
            lines += [f"{ri:.4f}\t{ri / pitch:.2f}\t{pi:.4f}" for ri, pi in zip(r, prof)]
            path = out / f"{name}_{label}_profile.txt"
            path.write_text("\n".join(lines) + "\n")
            written.append(path)
    path = out / f"{name}_features.txt"
    path.write_text(_feature_table(result))
    written.append(path)
    path = out / f"{name}_report.txt"
    path.write_text(_report_text(result))
    written.append(path)
    return written
