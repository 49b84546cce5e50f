"""
Energy and momentum bookkeeping for three-wave mixing in a uniaxial crystal.

Conventions
-----------
* wavelengths are vacuum wavelengths in nm, wave numbers k = 2 pi n / lambda in
  rad/nm;
* directions are unit 3-vectors in the lab frame (crystal face normal = +z,
  optic axis in the x-z plane, see :class:`~spucsim.dispersion.CrystalSpec`);
* the pump is extraordinary, signal and idler are ordinary (type I);
* emission angles are solved in the plane spanned by the pump and the optic
  axis; the idler leaves on the opposite side of the pump from the signal.

Pump walk-off is neglected: the pump is refracted with its phase index and the
wave vector is taken parallel to the ray.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import CrystalSpec, index_extraordinary, index_ordinary

__all__ = [
    "PhaseMatchError",
    "BeamSpec",
    "PhaseMatchSolution",
    "StimulatedEmission",
    "idler_wavelength",
    "energy_residual",
    "closure_residual",
    "bisect",
    "refract_face",
    "pump_inside",
    "collinear_cut_angle",
    "solve_emission_angles",
    "stimulated_direction",
    "exit_beam",
    "enter_beam",
    "direction_from_angles",
    "angle_between",
]

SOLVER_TOL = 1e-10  # rad, bisection stopping width
SOLVER_MAXITER = 200
N_BRACKET = 1024
#: relative mismatch |f(0)|/k0 below which a solution is reported as collinear
COLLINEAR_TOL = 1e-12
#: relative mismatch above which a stimulated beam is not considered phase matched
MATCH_TOL = 1e-4


class PhaseMatchError(ValueError):
    """No real set of emission angles satisfies wave-vector conservation."""


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def direction_from_angles(theta_deg: float, phi_deg: float = 0.0) -> np.ndarray:
    """Unit vector at polar angle ``theta_deg`` from +z and azimuth ``phi_deg`` from +x."""
    t, p = math.radians(theta_deg), math.radians(phi_deg)
    return np.array([math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)])


def angle_between(a, b) -> float:
    """Angle in radians between two vectors, accurate for nearly parallel inputs."""
    a, b = _unit(a), _unit(b)
    return 2.0 * math.atan2(np.linalg.norm(a - b), np.linalg.norm(a + b))


@dataclass(frozen=True)
class BeamSpec:
    """Monochromatic plane wave: vacuum wavelength (nm), unit direction, power (mW)."""

    wavelength: float
    direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    power: float = 0.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (3,):
            raise ValueError(f"direction must be a 3-vector, got shape {d.shape}")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError(f"direction must have unit norm, |d| = {np.linalg.norm(d)!r}")
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if not self.power >= 0:
            raise ValueError(f"power must be non-negative, got {self.power}")
        object.__setattr__(self, "direction", d)

    @property
    def omega(self) -> float:
        """Angular frequency in rad/s."""
        return 2.0 * math.pi * 299792458.0 / (self.wavelength * 1e-9)


@dataclass(frozen=True)
class PhaseMatchSolution:
    """Signal and idler inside the crystal for a given pump.

    ``signal`` and ``idler`` carry internal directions; use :func:`exit_beam`
    to get them in air.  ``internal_angles`` are measured from the pump.
    """

    signal: BeamSpec
    idler: BeamSpec
    internal_angles: tuple[float, float]
    residual: float
    pump_direction: np.ndarray
    pump_index: float
    iterations: int = 0


@dataclass(frozen=True)
class StimulatedEmission:
    """Difference-frequency beam forced by an injected seed.

    ``mismatch`` is | |k0 - k1| - k3 | / |k0|, where k3 is the wave number an
    ordinary wave at the idler wavelength must have.  ``matched`` flags whether
    the injected beam enters at the right angle (mismatch below ``MATCH_TOL``).
    """

    internal: BeamSpec
    external: BeamSpec
    mismatch: float
    matched: bool


def idler_wavelength(pump_wavelength: float, signal_wavelength: float) -> float:
    """Wavelength closing the energy balance 1/l_p = 1/l_s + 1/l_i."""
    if not signal_wavelength > pump_wavelength > 0:
        raise ValueError(
            f"signal wavelength ({signal_wavelength} nm) must exceed pump wavelength ({pump_wavelength} nm)")
    return pump_wavelength * signal_wavelength / (signal_wavelength - pump_wavelength)


def energy_residual(pump_wavelength: float, signal_wavelength: float, idler_wavelength: float) -> float:
    """Relative violation |1/l0 - 1/l2 - 1/l3| * l0 of frequency conservation."""
    if min(pump_wavelength, signal_wavelength, idler_wavelength) <= 0:
        raise ValueError("wavelengths must be positive")
    return abs(1.0 / pump_wavelength - 1.0 / signal_wavelength - 1.0 / idler_wavelength) * pump_wavelength


def closure_residual(k0: float, k2: float, k3: float, theta2: float, theta3: float) -> float:
    """Relative wave-vector mismatch of a planar triangle k0 = k2 + k3.

    The signal sits at +theta2 and the idler at -theta3 about the pump.
    """
    transverse = k2 * math.sin(theta2) - k3 * math.sin(theta3)
    longitudinal = k2 * math.cos(theta2) + k3 * math.cos(theta3) - k0
    return math.hypot(transverse, longitudinal) / k0


def bisect(func, lo: float, hi: float, tol: float = SOLVER_TOL, maxiter: int = SOLVER_MAXITER):
    """Bisection for a root of ``func`` bracketed by [lo, hi].

    Returns ``(root, iterations)``.  Deterministic: the same inputs always
    take the same path.
    """
    flo, fhi = func(lo), func(hi)
    if flo == 0.0:
        return lo, 0
    if fhi == 0.0:
        return hi, 0
    if flo * fhi > 0.0:
        raise ValueError(f"root not bracketed: f({lo})={flo}, f({hi})={fhi}")
    for i in range(1, maxiter + 1):
        mid = 0.5 * (lo + hi)
        fmid = func(mid)
        if fmid == 0.0:
            return mid, i
        if (fmid > 0.0) == (flo > 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi - lo < tol:
            return 0.5 * (lo + hi), i
    raise RuntimeError(f"bisection did not converge in {maxiter} iterations")


def refract_face(direction, n_inside: float, n_outside: float, face_normal) -> np.ndarray:
    """Snell refraction of a ray crossing a plane face from ``n_inside`` to ``n_outside``.

    The tangential component scales by n_inside/n_outside; the sign of the
    normal component is preserved, so ``face_normal`` may point either way.
    """
    d = _unit(direction)
    nrm = _unit(face_normal)
    cos_i = float(d @ nrm)
    tangential = d - cos_i * nrm
    t_out = tangential * (n_inside / n_outside)
    s2 = float(t_out @ t_out)
    if s2 > 1.0:
        raise ValueError(f"total internal reflection (sin of exit angle = {math.sqrt(s2):.6f})")
    if n_inside == n_outside:
        return d
    return _unit(t_out + math.copysign(math.sqrt(1.0 - s2), cos_i) * nrm)


def _axis_angle(crystal: CrystalSpec, direction) -> float:
    """Angle to the optic axis folded into [0, pi/2]."""
    c = abs(float(_unit(direction) @ crystal.optic_axis))
    return math.acos(min(1.0, c))


def pump_inside(crystal: CrystalSpec, pump: BeamSpec):
    """Refract an extraordinary pump into the crystal.

    Returns ``(direction, index, theta)``: internal unit direction, phase index
    and angle to the optic axis (rad).  The index depends on the internal
    direction, so the refraction is iterated to a fixed point.
    """
    model = crystal.model
    normal = crystal.face_normal
    theta = math.radians(crystal.cut_angle)
    n = index_extraordinary(model, pump.wavelength, theta)
    d = refract_face(pump.direction, 1.0, n, normal)
    for _ in range(50):
        theta = _axis_angle(crystal, d)
        n_new = index_extraordinary(model, pump.wavelength, theta)
        d = refract_face(pump.direction, 1.0, n_new, normal)
        if n_new == n:
            break
        n = n_new
    return d, n, theta


def enter_beam(beam: BeamSpec, crystal: CrystalSpec) -> BeamSpec:
    """Refract an ordinary beam from air into the crystal."""
    n = index_ordinary(crystal.model, beam.wavelength)
    return BeamSpec(beam.wavelength, refract_face(beam.direction, 1.0, n, crystal.face_normal), beam.power)


def exit_beam(beam: BeamSpec, crystal: CrystalSpec) -> BeamSpec:
    """Refract an ordinary beam from inside the crystal into air."""
    n = index_ordinary(crystal.model, beam.wavelength)
    return BeamSpec(beam.wavelength, refract_face(beam.direction, n, 1.0, crystal.face_normal), beam.power)


def _principal_basis(crystal: CrystalSpec, p):
    """Unit vector in the pump/optic-axis plane, perpendicular to the pump, and its normal."""
    e1 = crystal.optic_axis - (crystal.optic_axis @ p) * p
    if np.linalg.norm(e1) < 1e-12:
        e1 = np.array([1.0, 0.0, 0.0]) - p[0] * p
    e1 = _unit(e1)
    return e1, np.cross(p, e1)


def _rotate_from(p, e1, e2, theta, azimuth):
    return _unit(math.cos(theta) * p + math.sin(theta) * (math.cos(azimuth) * e1 + math.sin(azimuth) * e2))


def collinear_cut_angle(model, pump_wavelength: float, signal_wavelength: float | None = None) -> float:
    """Angle to the optic axis (degrees) giving collinear type-I phase matching.

    Defaults to the degenerate pair, signal = idler = 2 * pump.
    """
    if signal_wavelength is None:
        signal_wavelength = 2.0 * pump_wavelength
    li = idler_wavelength(pump_wavelength, signal_wavelength)
    needed = pump_wavelength * (index_ordinary(model, signal_wavelength) / signal_wavelength
                                + index_ordinary(model, li) / li)
    no = index_ordinary(model, pump_wavelength)
    ne = index_extraordinary(model, pump_wavelength, math.pi / 2)
    s2 = (1.0 / needed**2 - 1.0 / no**2) / (1.0 / ne**2 - 1.0 / no**2)
    if not 0.0 <= s2 <= 1.0:
        raise PhaseMatchError(
            f"no collinear phase matching for {pump_wavelength} nm -> {signal_wavelength} nm in {model.name}")
    return math.degrees(math.asin(math.sqrt(s2)))


def solve_emission_angles(crystal: CrystalSpec, pump: BeamSpec, signal_wavelength: float,
                          azimuth: float = 0.0) -> PhaseMatchSolution:
    """Non-collinear type-I emission angles for a pump and a chosen signal wavelength.

    Solves k2 sin(t2) = k3 sin(t3) and k2 cos(t2) + k3 cos(t3) = k0 by
    bisection on t2, with t3 eliminated through the transverse equation.  The
    signal is placed at ``azimuth`` (rad) about the pump, measured from the
    pump/optic-axis plane; the idler is at ``azimuth + pi``.

    Raises
    ------
    PhaseMatchError
        If the pump wave vector is longer than k2 + k3 (no real solution).
    """
    model = crystal.model
    li = idler_wavelength(pump.wavelength, signal_wavelength)
    model.check_range([signal_wavelength, li])
    p, n0, _ = pump_inside(crystal, pump)
    k0 = 2.0 * math.pi * n0 / pump.wavelength
    k2 = 2.0 * math.pi * index_ordinary(model, signal_wavelength) / signal_wavelength
    k3 = 2.0 * math.pi * index_ordinary(model, li) / li

    def longitudinal(t2):
        s3 = k2 * math.sin(t2) / k3
        return k2 * math.cos(t2) + k3 * math.sqrt(max(0.0, 1.0 - s3 * s3)) - k0

    f0 = k2 + k3 - k0
    iterations = 0
    if abs(f0) <= COLLINEAR_TOL * k0:
        t2 = t3 = 0.0
    elif f0 < 0.0:
        raise PhaseMatchError(
            f"phase matching impossible for {pump.wavelength} nm -> {signal_wavelength} nm "
            f"+ {li:.3f} nm: k_pump exceeds k_signal + k_idler by {-f0 / k0:.3e} (relative)")
    else:
        t_max = math.asin(min(1.0, k3 / k2))
        grid = np.linspace(0.0, t_max, N_BRACKET)
        values = np.array([longitudinal(t) for t in grid])
        crossing = np.nonzero(values <= 0.0)[0]
        if crossing.size == 0:
            raise PhaseMatchError(
                f"phase matching impossible for {pump.wavelength} nm -> {signal_wavelength} nm: "
                "longitudinal closure never reached")
        j = int(crossing[0])
        t2, iterations = bisect(longitudinal, float(grid[j - 1]), float(grid[j]))
        t3 = math.asin(k2 * math.sin(t2) / k3)

    residual = closure_residual(k0, k2, k3, t2, t3)
    e1, e2 = _principal_basis(crystal, p)
    signal = BeamSpec(signal_wavelength, _rotate_from(p, e1, e2, t2, azimuth))
    idler = BeamSpec(li, _rotate_from(p, e1, e2, t3, azimuth + math.pi))
    return PhaseMatchSolution(signal, idler, (t2, t3), residual, p, n0, iterations)


def stimulated_direction(pump: BeamSpec, injected: BeamSpec, crystal: CrystalSpec) -> StimulatedEmission:
    """Direction of the beam stimulated by an injected seed, k3 = k0 - k1.

    Both beams are given in air and refracted into the crystal (pump
    extraordinary, seed ordinary).  The result is returned both inside the
    crystal and after the exit face.
    """
    li = idler_wavelength(pump.wavelength, injected.wavelength)
    model = crystal.model
    p, n0, _ = pump_inside(crystal, pump)
    seed = enter_beam(injected, crystal)
    k0 = 2.0 * math.pi * n0 / pump.wavelength * p
    k1 = 2.0 * math.pi * index_ordinary(model, injected.wavelength) / injected.wavelength * seed.direction
    k3 = k0 - k1
    k3_norm = float(np.linalg.norm(k3))
    k3_required = 2.0 * math.pi * index_ordinary(model, li) / li
    mismatch = abs(k3_norm - k3_required) / float(np.linalg.norm(k0))
    internal = BeamSpec(li, k3 / k3_norm)
    return StimulatedEmission(internal, exit_beam(internal, crystal), mismatch, mismatch < MATCH_TOL)
