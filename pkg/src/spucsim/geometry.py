"""
Screen-plane patterns: SPDC rings, hypothetical SPUC arcs, and their rendering.

The screen is a plane normal to the lab z axis at ``distance`` mm from the
crystal.  Screen coordinates are in mm, measured from the point where the
pump ray hits the screen; x follows the lab x axis and y the lab y axis.
Pixel (row, col) maps to ``x = (col - origin_col) * pitch`` and
``y = (row - origin_row) * pitch``.

SPUC arc model
--------------
The angular distribution of the hypothesised up-conversion fluorescence is not
available in closed form, so :func:`spuc_arcs` uses a stand-in that honours
only the anchoring constraints: the arc at the pump frequency passes through
the pump spot, the arc at the stimulated frequency passes through the
stimulated spot, and arcs at intermediate frequencies lie between them.  Each
arc is a circle of radius ``offset`` whose centre is displaced by ``offset``
perpendicular to the pump-stimulated line (hence off-centre with respect to
the pump) and slides linearly in optical frequency from one anchor to the
other; the drawn part is limited to ``arc_span`` and clipped to the band
between the two anchors.  Replace this function if a better model is known.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import CrystalSpec
from .kinematics import BeamSpec, exit_beam, idler_wavelength, solve_emission_angles

__all__ = [
    "ScreenGeometry",
    "RingFeature",
    "ScreenPattern",
    "screen_point",
    "spot_feature",
    "spdc_ring",
    "spdc_ring_pair",
    "spuc_arcs",
    "render_pattern",
    "feature_mask",
    "radial_profile",
    "FWHM_TO_SIGMA",
]

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ScreenGeometry:
    distance: float = 500.0
    pixel_pitch: float = 0.05
    width: int = 1024
    height: int = 1024
    origin: tuple[float, float] | None = None  # (row, col) of the pump spot; default frame centre

    def __post_init__(self):
        if not self.distance > 0:
            raise ValueError(f"screen distance must be positive, got {self.distance}")
        if not self.pixel_pitch > 0:
            raise ValueError(f"pixel pitch must be positive, got {self.pixel_pitch}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"frame size must be positive, got {self.width}x{self.height}")
        if self.origin is None:
            object.__setattr__(self, "origin", ((self.height - 1) / 2.0, (self.width - 1) / 2.0))
        r, c = self.origin
        if not (0 <= r <= self.height - 1 and 0 <= c <= self.width - 1):
            raise ValueError(f"origin {self.origin} lies outside the {self.height}x{self.width} frame")

    @property
    def shape(self):
        return (self.height, self.width)

    def to_pixel(self, point):
        """Screen point (mm) to fractional (row, col)."""
        x, y = point
        return (self.origin[0] + y / self.pixel_pitch, self.origin[1] + x / self.pixel_pitch)

    def coordinates(self):
        """Screen x and y (mm) of every pixel centre, each of shape (height, width)."""
        rows = (np.arange(self.height) - self.origin[0]) * self.pixel_pitch
        cols = (np.arange(self.width) - self.origin[1]) * self.pixel_pitch
        y, x = np.meshgrid(rows, cols, indexing="ij")
        return x, y


@dataclass(frozen=True)
class RingFeature:
    """A circle or arc on the screen.

    ``arc_span`` is ``(start, stop)`` in rad, measured counter-clockwise from
    +x about ``center``, with ``0 <= stop - start <= 2 pi``.  A radius of zero
    renders as a round spot.  ``width`` overrides the rendering width (mm).
    """

    wavelength: float
    center: tuple[float, float]
    radius: float
    arc_span: tuple[float, float] = (0.0, TWO_PI)
    relative_intensity: float = 1.0
    kind: str = "spdc"
    width: float | None = None

    def __post_init__(self):
        if not self.radius >= 0:
            raise ValueError(f"radius must be non-negative, got {self.radius}")
        start, stop = self.arc_span
        if not (0.0 <= stop - start <= TWO_PI + 1e-12):
            raise ValueError(f"arc span {self.arc_span} is not a sub-interval of a full turn")
        if not self.relative_intensity >= 0:
            raise ValueError(f"relative intensity must be non-negative, got {self.relative_intensity}")
        if self.width is not None and not self.width > 0:
            raise ValueError(f"feature width must be positive, got {self.width}")

    @property
    def full_circle(self) -> bool:
        start, stop = self.arc_span
        return stop - start >= TWO_PI

    def scaled(self, factor: float) -> "RingFeature":
        return RingFeature(self.wavelength, self.center, self.radius, self.arc_span,
                           self.relative_intensity * factor, self.kind, self.width)

    def points(self, n: int = 256) -> np.ndarray:
        """Sample ``n`` points along the drawn part of the feature, shape (n, 2)."""
        start, stop = self.arc_span
        phi = np.linspace(start, stop, n)
        cx, cy = self.center
        return np.column_stack([cx + self.radius * np.cos(phi), cy + self.radius * np.sin(phi)])


@dataclass
class ScreenPattern:
    geometry: ScreenGeometry
    irradiance: np.ndarray
    features: list = field(default_factory=list)
    effective_wavelength: float | None = None

    def __post_init__(self):
        if self.irradiance.shape != self.geometry.shape:
            raise ValueError(f"irradiance shape {self.irradiance.shape} does not match screen {self.geometry.shape}")
        if np.any(self.irradiance < 0):
            raise ValueError("irradiance must be non-negative")


def screen_point(direction, pump_direction, screen: ScreenGeometry):
    """Where a ray leaving the crystal along ``direction`` hits the screen, relative to the pump spot (mm)."""
    d = np.asarray(direction, dtype=float)
    p = np.asarray(pump_direction, dtype=float)
    if d[2] <= 0 or p[2] <= 0:
        raise ValueError("ray does not reach the screen")
    x = screen.distance * (d[0] / d[2] - p[0] / p[2])
    y = screen.distance * (d[1] / d[2] - p[1] / p[2])
    return (float(x), float(y))


def spot_feature(point, wavelength, intensity=1.0, kind="spot", width=None) -> RingFeature:
    return RingFeature(wavelength, (float(point[0]), float(point[1])), 0.0, (0.0, TWO_PI),
                       intensity, kind, width)


def spdc_ring(crystal: CrystalSpec, pump: BeamSpec, wavelength: float, screen: ScreenGeometry) -> RingFeature:
    """Screen ring of down-converted light at ``wavelength``.

    The emission cone is refracted out of the crystal in the pump/optic-axis
    plane on both sides of the pump; the ring is the circle through those two
    screen points.  For a pump at normal incidence this is exactly the circle
    of radius ``distance * tan(external angle)`` about the pump spot.
    """
    a = exit_beam(solve_emission_angles(crystal, pump, wavelength, 0.0).signal, crystal)
    b = exit_beam(solve_emission_angles(crystal, pump, wavelength, math.pi).signal, crystal)
    pa = screen_point(a.direction, pump.direction, screen)
    pb = screen_point(b.direction, pump.direction, screen)
    center = ((pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0)
    radius = math.hypot(pa[0] - pb[0], pa[1] - pb[1]) / 2.0
    return RingFeature(wavelength, center, radius)


def spdc_ring_pair(crystal, pump, wavelength, screen):
    """The ring at ``wavelength`` and the ring of its energy-conjugate partner."""
    partner = idler_wavelength(pump.wavelength, wavelength)
    return spdc_ring(crystal, pump, wavelength, screen), spdc_ring(crystal, pump, partner, screen)


def spuc_arcs(crystal: CrystalSpec, injected: BeamSpec, pump_spot, stimulated_spot, n_arcs: int,
              screen: ScreenGeometry, *, pump_wavelength: float, ratio: float = 0.5,
              arc_span: float = math.pi, offset: float | None = None) -> list[RingFeature]:
    """Family of incomplete arcs where up-converted fluorescence would appear.

    Parameters
    ----------
    pump_spot, stimulated_spot : (x, y) in mm
        Anchor points: the arc at the pump frequency goes through
        ``pump_spot``, the arc at the stimulated (idler) frequency through
        ``stimulated_spot``.
    n_arcs : int
        Number of arcs, spaced evenly in optical frequency, endpoints included.
    ratio : float
        SPUC/SPDC intensity ratio; each arc gets ``relative_intensity = ratio``
        on the same scale as a unit-intensity SPDC ring.
    arc_span : float
        Maximum angular extent of each arc, rad.
    offset : float, optional
        Distance of the arc centres from the anchor line, which is also the arc
        radius.  Defaults to the anchor separation.
    """
    if n_arcs < 2:
        raise ValueError(f"need at least two arcs, got {n_arcs}")
    if not ratio >= 0:
        raise ValueError(f"SPUC ratio must be non-negative, got {ratio}")
    if not 0 < arc_span <= TWO_PI:
        raise ValueError(f"arc span must lie in (0, 2 pi], got {arc_span}")
    p = np.asarray(pump_spot, dtype=float)
    s = np.asarray(stimulated_spot, dtype=float)
    sep = float(np.linalg.norm(s - p))
    if sep <= 0.5 * screen.pixel_pitch:
        raise ValueError("pump and stimulated spots coincide; SPUC arcs are undefined")
    h = sep if offset is None else float(offset)
    if not h > 0:
        raise ValueError(f"arc offset must be positive, got {h}")

    stim_wl = idler_wavelength(pump_wavelength, injected.wavelength)
    crystal.model.check_range([pump_wavelength, stim_wl])

    u = (s - p) / sep
    nrm = np.array([-u[1], u[0]])
    toward_line = math.atan2(-nrm[1], -nrm[0])  # direction from an arc centre to its anchor
    arcs = []
    for t in np.linspace(0.0, 1.0, n_arcs):
        t = float(t)
        # linear in frequency between pump (t=0) and stimulated (t=1)
        wl = 1.0 / ((1.0 - t) / pump_wavelength + t / stim_wl)
        anchor = p + t * sep * u
        center = anchor + h * nrm
        lo = max(-arc_span / 2.0, math.asin(max(-1.0, -t * sep / h)))
        hi = min(arc_span / 2.0, math.asin(min(1.0, (1.0 - t) * sep / h)))
        # nrm is u turned +90 deg, so alpha maps to a counter-clockwise screen angle
        a0, a1 = toward_line + lo, toward_line + hi
        shift = math.floor(a0 / TWO_PI) * TWO_PI
        arcs.append(RingFeature(wl, (float(center[0]), float(center[1])), h,
                                (a0 - shift, a1 - shift), ratio, "spuc"))
    return arcs


def _distance_to_feature(f: RingFeature, x, y):
    dx = x - f.center[0]
    dy = y - f.center[1]
    r = np.hypot(dx, dy)
    if f.radius == 0.0 or f.full_circle:
        return np.abs(r - f.radius)
    start, stop = f.arc_span
    phi = np.mod(np.arctan2(dy, dx) - start, TWO_PI)
    inside = phi <= stop - start
    ends = f.points(2)
    d_end = np.minimum(np.hypot(x - ends[0, 0], y - ends[0, 1]), np.hypot(x - ends[1, 0], y - ends[1, 1]))
    return np.where(inside, np.abs(r - f.radius), d_end)


def render_pattern(features, screen: ScreenGeometry, ring_width: float) -> ScreenPattern:
    """Sum of Gaussian-profile rings, arcs and spots.

    Each feature contributes ``relative_intensity * exp(-d^2 / 2 sigma^2)``
    where ``d`` is the distance to the feature and sigma = FWHM / 2.355 with
    FWHM = ``ring_width`` (or the feature's own width).  Features are summed in
    list order.
    """
    if not ring_width > 0:
        raise ValueError(f"ring width must be positive, got {ring_width}")
    features = list(features)
    x, y = screen.coordinates()
    field_ = np.zeros(screen.shape)
    weighted_wl = 0.0
    for f in features:
        if f.relative_intensity == 0.0:
            continue
        sigma = (f.width or ring_width) * FWHM_TO_SIGMA
        d = _distance_to_feature(f, x, y)
        contrib = f.relative_intensity * np.exp(-0.5 * (d / sigma) ** 2)
        field_ += contrib
        weighted_wl += f.wavelength * float(contrib.sum())
    total = float(field_.sum())
    eff = weighted_wl / total if total > 0 else None
    return ScreenPattern(screen, field_, features, eff)


def feature_mask(features, screen: ScreenGeometry, ring_width: float, level: float = 0.5) -> np.ndarray:
    """Pixels where any feature, at unit intensity, exceeds ``level`` of its peak."""
    x, y = screen.coordinates()
    mask = np.zeros(screen.shape, dtype=bool)
    for f in features:
        sigma = (f.width or ring_width) * FWHM_TO_SIGMA
        mask |= np.exp(-0.5 * (_distance_to_feature(f, x, y) / sigma) ** 2) >= level
    return mask


def radial_profile(image, screen: ScreenGeometry, center=(0.0, 0.0)):
    """Azimuthal mean of ``image`` in one-pixel radial bins about ``center`` (mm).

    Returns ``(radius_mm, mean)`` for the bin centres.
    """
    x, y = screen.coordinates()
    r_pix = np.hypot(x - center[0], y - center[1]) / screen.pixel_pitch
    bins = np.floor(r_pix).astype(int).ravel()
    sums = np.bincount(bins, weights=np.asarray(image, dtype=float).ravel())
    counts = np.bincount(bins)
    valid = counts > 0
    radius = (np.arange(sums.size) + 0.5) * screen.pixel_pitch
    return radius[valid], sums[valid] / counts[valid]
