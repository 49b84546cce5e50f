"""
Refractive indices of uniaxial birefringent crystals.

Dispersion tables are small INI documents.  Each principal index is a sum of
Sellmeier-type terms, every term being a coefficient triple ``(A, B, C)``::

    n^2(lambda) = sum_i  A_i + B_i / (lambda^2 - C_i)       lambda in um

so a single term ``(2.25, 0, 0)`` is a dispersion-free medium with n = 1.5.
Wavelengths passed to the public functions are vacuum wavelengths in nm;
propagation angles are in radians.

Grammar of a table (all sections required except ``[check]``)::

    [sellmeier]
    name = LiIO3
    valid_range_nm = 340, 2000

    [ordinary]
    term1 = A, B, C
    term2 = ...            # optional extra terms, applied in key order

    [extraordinary]
    term1 = A, B, C

    [check]
    o_633 = 1.88135        # expected n_o at 633 nm
    e_351 = 1.81439        # expected principal n_e at 351 nm

Every ``[check]`` entry is verified at load time to within 1e-4.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "DispersionError",
    "SellmeierModel",
    "CrystalSpec",
    "load_dispersion",
    "index_ordinary",
    "index_extraordinary",
    "index_principal_extraordinary",
]

#: number of wavelengths sampled when screening a table for unphysical values
N_SCREEN = 512
#: tolerance applied to the ``[check]`` points of a table
CHECK_TOL = 1e-4

Term = tuple[float, float, float]


class DispersionError(ValueError):
    """Raised for malformed or unphysical dispersion tables and out-of-range queries."""


@dataclass(frozen=True)
class SellmeierModel:
    name: str
    ordinary_terms: tuple[Term, ...]
    extraordinary_terms: tuple[Term, ...]
    valid_range: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.valid_range
        if not (0 < lo < hi):
            raise DispersionError(f"valid_range must satisfy 0 < min < max, got {self.valid_range}")
        for label, terms in (("ordinary", self.ordinary_terms), ("extraordinary", self.extraordinary_terms)):
            if not terms:
                raise DispersionError(f"{label} index has no terms")
            for term in terms:
                if len(term) != 3 or not all(math.isfinite(c) for c in term):
                    raise DispersionError(f"{label} term {term!r} is not three finite numbers")

    def check_range(self, wavelength):
        lo, hi = self.valid_range
        w = np.asarray(wavelength, dtype=float)
        if np.any(~np.isfinite(w)) or np.any(w < lo) or np.any(w > hi):
            raise DispersionError(
                f"wavelength {wavelength} nm outside valid range [{lo:g}, {hi:g}] nm of {self.name}")


@dataclass(frozen=True)
class CrystalSpec:
    """A uniaxial crystal plate.

    ``cut_angle`` is the angle between the optic axis and the face normal in
    degrees.  The lab frame puts the face normal along +z and the optic axis in
    the x-z plane, tilted towards +x.  Only type-I phase matching (e -> o + o)
    is modelled.
    """

    model: SellmeierModel
    cut_angle: float
    length: float = 10.0
    process: str = "type-I"

    def __post_init__(self):
        if not (0.0 < self.cut_angle < 90.0):
            raise DispersionError(f"cut_angle must lie in (0, 90) degrees, got {self.cut_angle}")
        if not self.length > 0:
            raise DispersionError(f"crystal length must be positive, got {self.length}")
        if self.process != "type-I":
            raise DispersionError(f"unsupported phase-matching process {self.process!r}")

    @property
    def optic_axis(self) -> np.ndarray:
        t = math.radians(self.cut_angle)
        return np.array([math.sin(t), 0.0, math.cos(t)])

    @property
    def face_normal(self) -> np.ndarray:
        return np.array([0.0, 0.0, 1.0])


def _n_squared(terms, wavelength_nm):
    lam2 = (np.asarray(wavelength_nm, dtype=float) * 1e-3) ** 2
    total = 0.0
    for a, b, c in terms:
        total = total + a + b / (lam2 - c)
    return total


def _evaluate(model, terms, wavelength):
    model.check_range(wavelength)
    n2 = _n_squared(terms, wavelength)
    out = np.sqrt(n2)
    return float(out) if np.ndim(out) == 0 else out


def index_ordinary(model: SellmeierModel, wavelength):
    """Ordinary index n_o at vacuum wavelength(s) in nm."""
    return _evaluate(model, model.ordinary_terms, wavelength)


def index_principal_extraordinary(model: SellmeierModel, wavelength):
    """Principal extraordinary index n_e (propagation normal to the optic axis)."""
    return _evaluate(model, model.extraordinary_terms, wavelength)


def index_extraordinary(model: SellmeierModel, wavelength, theta):
    """Extraordinary index for propagation at angle ``theta`` (rad) to the optic axis.

    Uses the index ellipsoid, 1/n^2 = cos^2(theta)/n_o^2 + sin^2(theta)/n_e^2.
    ``theta`` must lie in [0, pi/2]; the endpoints return n_o and n_e exactly.
    """
    theta = float(theta)
    if not (0.0 <= theta <= math.pi / 2):
        raise DispersionError(f"theta must lie in [0, pi/2], got {theta}")
    if theta == 0.0:
        return index_ordinary(model, wavelength)
    if theta == math.pi / 2:
        return index_principal_extraordinary(model, wavelength)
    no = index_ordinary(model, wavelength)
    ne = index_principal_extraordinary(model, wavelength)
    c, s = math.cos(theta), math.sin(theta)
    return 1.0 / np.sqrt((c / no) ** 2 + (s / ne) ** 2)


def _parse_floats(text, what, count=None):
    try:
        values = tuple(float(v) for v in re.split(r"[,\s]+", text.strip()) if v)
    except ValueError:
        raise DispersionError(f"could not parse {what}: {text!r}") from None
    if count is not None and len(values) != count:
        raise DispersionError(f"{what} needs {count} numbers, got {len(values)}")
    return values


def _terms(parser, section):
    if not parser.has_section(section):
        raise DispersionError(f"missing [{section}] section")
    keys = sorted(parser.options(section), key=lambda k: (len(k), k))
    return tuple(_parse_floats(parser.get(section, k), f"[{section}] {k}", 3) for k in keys)


def _screen(model):
    """Reject tables with a pole or an index <= 1 anywhere inside valid_range."""
    lo, hi = model.valid_range
    grid = np.linspace(lo, hi, N_SCREEN)
    lam2_lo, lam2_hi = (lo * 1e-3) ** 2, (hi * 1e-3) ** 2
    for label, terms in (("ordinary", model.ordinary_terms), ("extraordinary", model.extraordinary_terms)):
        for a, b, c in terms:
            if b != 0.0 and lam2_lo <= c <= lam2_hi:
                raise DispersionError(
                    f"non-physical index: {label} term has a pole at {1e3 * math.sqrt(c):.1f} nm inside valid_range")
        with np.errstate(all="ignore"):
            n2 = _n_squared(terms, grid)
        bad = ~np.isfinite(n2) | (n2 <= 1.0)
        if np.any(bad):
            raise DispersionError(
                f"non-physical {label} index (<= 1 or complex) at {grid[bad][0]:.1f} nm")


def _read_source(source):
    """Return the text of a table given a shipped name, a path, or the text itself."""
    if isinstance(source, Path):
        return source.read_text()
    if "\n" in source or "[" in source:
        return source
    path = Path(source)
    if path.exists():
        return path.read_text()
    shipped = resources.files("spucsim") / "data" / f"{source.lower()}.ini"
    if shipped.is_file():
        return shipped.read_text()
    raise DispersionError(f"no dispersion table named or located at {source!r}")


def load_dispersion(source) -> SellmeierModel:
    """Load and validate a dispersion table.

    ``source`` may be the name of a shipped table (``"liio3"``), a path, or the
    document text.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(_read_source(source))
    except configparser.Error as exc:
        raise DispersionError(f"could not parse dispersion table: {exc}") from None
    if not parser.has_section("sellmeier"):
        raise DispersionError("missing [sellmeier] section")
    head = parser["sellmeier"]
    rng = _parse_floats(head.get("valid_range_nm", ""), "valid_range_nm", 2)
    model = SellmeierModel(
        name=head.get("name", "unnamed"),
        ordinary_terms=_terms(parser, "ordinary"),
        extraordinary_terms=_terms(parser, "extraordinary"),
        valid_range=(rng[0], rng[1]),
    )
    _screen(model)

    if parser.has_section("check"):
        for key, value in parser.items("check"):
            m = re.fullmatch(r"([oe])_(\d+(?:\.\d+)?)", key)
            if m is None:
                raise DispersionError(f"bad [check] key {key!r}; expected o_<nm> or e_<nm>")
            wl = float(m.group(2))
            fn = index_ordinary if m.group(1) == "o" else index_principal_extraordinary
            expected = _parse_floats(value, f"[check] {key}", 1)[0]
            got = fn(model, wl)
            if abs(got - expected) > CHECK_TOL:
                raise DispersionError(
                    f"{model.name}: {key} evaluates to {got:.6f}, table check expects {expected:.6f}")
    return model
