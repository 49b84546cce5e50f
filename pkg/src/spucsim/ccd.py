"""
Linear CCD model, dark-frame subtraction, region detection and exposure-ratio limits.

Expected counts in a pixel are::

    irradiance * qe(lambda) * t * (F_REF / N)^2 + dark_rate * t + bias

with F_REF = 2.8, so the irradiance of a pattern is in counts per second at
f/2.8 and unit quantum efficiency.  Realised counts are Poisson shot noise on
the light and dark terms, plus the constant bias, plus Gaussian read noise,
rounded to integers and clamped to [0, full_well].

Random numbers come from a Philox counter-based stream keyed by the frame seed,
with one independent counter block per pixel row: a row can be generated on
its own, in any order, and always comes out the same.

Frames are stored as 16-bit binary PGM (P5, big-endian) with a ``.meta``
sidecar of ``key = value`` lines (exposure, f_stop, seed, dark_subtracted,
pedestal).  Dark-subtracted frames may hold negative counts; they are written
with a constant ``pedestal`` added so the file stays unsigned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import ScreenPattern

__all__ = [
    "F_REF",
    "CameraSpec",
    "ExposureFrame",
    "LimitReport",
    "synthesize_frame",
    "dark_frame",
    "subtract_dark",
    "detect_in_region",
    "intensity_upper_limit",
    "expected_significance",
    "write_frame",
    "read_frame",
]

F_REF = 2.8
DETECTION_THRESHOLD = 5.0

#: silicon-like response, above 10% from the near UV to ~900 nm
DEFAULT_QE = ((300.0, 0.03), (350.0, 0.10), (400.0, 0.18), (500.0, 0.35), (600.0, 0.42),
              (700.0, 0.38), (800.0, 0.26), (900.0, 0.12), (1000.0, 0.04), (1100.0, 0.005))


@dataclass(frozen=True)
class CameraSpec:
    """Camera response.

    The noise defaults (full well 65535, read noise 10 counts, dark rate 20
    counts/px/s, bias 200 counts) are placeholders, not measured values.
    """

    qe_curve: tuple = DEFAULT_QE
    full_well: float = 65535.0
    dark_rate: float = 20.0
    read_noise: float = 10.0
    max_exposure: float = 16.0
    bias: float = 200.0

    def __post_init__(self):
        pts = np.asarray(self.qe_curve, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 1:
            raise ValueError("qe_curve must be a sequence of (wavelength_nm, qe) pairs")
        if np.any(np.diff(pts[:, 0]) <= 0):
            raise ValueError("qe_curve wavelengths must be strictly increasing")
        if np.any((pts[:, 1] < 0) | (pts[:, 1] > 1)):
            raise ValueError("quantum efficiency must lie in [0, 1]")
        object.__setattr__(self, "qe_curve", tuple(map(tuple, pts.tolist())))
        for name in ("full_well", "max_exposure"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("dark_rate", "read_noise", "bias"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        if self.bias >= self.full_well:
            raise ValueError("bias must be below full_well")

    def qe(self, wavelength):
        """Piecewise-linear quantum efficiency; zero outside the tabulated range."""
        pts = np.asarray(self.qe_curve)
        return np.interp(wavelength, pts[:, 0], pts[:, 1], left=0.0, right=0.0)


@dataclass(frozen=True)
class ExposureFrame:
    pixels: np.ndarray
    exposure: float
    f_stop: float
    dark_subtracted: bool = False
    rng_seed: int | None = None

    def __post_init__(self):
        if not self.exposure > 0:
            raise ValueError(f"exposure must be positive, got {self.exposure}")
        if not self.f_stop > 0:
            raise ValueError(f"f_stop must be positive, got {self.f_stop}")
        if self.pixels.ndim != 2:
            raise ValueError("pixels must be a 2-D array")
        if not self.dark_subtracted and np.any(self.pixels < 0):
            raise ValueError("raw frames cannot hold negative counts")


@dataclass(frozen=True)
class LimitReport:
    """Outcome of a detect / no-detect exposure pair.

    ``ratio_limit`` R means the up-converted intensity is below 1/R of the
    down-converted one: I_SPUC < I_SPDC / R.  It is ``None`` when the null
    exposure showed a signal.
    """

    detect_exposure: float
    null_exposure: float
    detect_stop: float
    null_stop: float
    detected_in_null: bool
    ratio_limit: float | None
    significance: float | None = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.detected_in_null and self.ratio_limit is not None:
            raise ValueError("a limit cannot be quoted when the null exposure shows a detection")
        if self.ratio_limit is not None and not self.ratio_limit > 0:
            raise ValueError("ratio_limit must be positive")

    def summary(self) -> str:
        if self.detected_in_null:
            sig = f" at {self.significance:.1f} sigma" if self.significance is not None else ""
            return f"SPUC detected in the null exposure{sig}; no upper limit"
        return f"I_SPUC < I_SPDC / {self.ratio_limit:g}"


def _row_generator(seed: int, row: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, row, 0]))


def _check_exposure(camera, exposure):
    if not (0.0 < exposure <= camera.max_exposure):
        raise ValueError(f"exposure {exposure} s outside (0, {camera.max_exposure}] s")


def expected_counts(irradiance, camera: CameraSpec, exposure, f_stop, wavelength):
    """Noise-free counts (unclamped)."""
    gain = float(camera.qe(wavelength)) * exposure * (F_REF / f_stop) ** 2
    return np.asarray(irradiance, dtype=float) * gain + (camera.dark_rate * exposure + camera.bias)


def synthesize_frame(pattern: ScreenPattern | None, camera: CameraSpec, exposure: float, f_stop: float,
                     seed: int, *, noise: bool = True, wavelength: float | None = None,
                     shape=None) -> ExposureFrame:
    """Expose ``pattern`` on the camera.

    ``wavelength`` selects the quantum efficiency and defaults to the
    pattern's irradiance-weighted wavelength.  ``pattern=None`` gives a dark
    exposure of the given ``shape``.  With ``noise=False`` the expected counts
    are returned (clamped to full well, not rounded).
    """
    _check_exposure(camera, exposure)
    if not f_stop > 0:
        raise ValueError(f"f_stop must be positive, got {f_stop}")
    if pattern is None:
        if shape is None:
            raise ValueError("a dark exposure needs a frame shape")
        irradiance = np.zeros(shape)
        wl = 0.0
    else:
        irradiance = pattern.irradiance
        if shape is not None and tuple(shape) != irradiance.shape:
            raise ValueError(f"pattern shape {irradiance.shape} does not match frame shape {tuple(shape)}")
        wl = wavelength if wavelength is not None else (pattern.effective_wavelength or 0.0)
    mean = expected_counts(irradiance, camera, exposure, f_stop, wl)
    if not noise:
        return ExposureFrame(np.clip(mean, 0.0, camera.full_well), exposure, f_stop, False, seed)

    seed = int(seed)
    out = np.empty_like(mean)
    for row in range(mean.shape[0]):
        rng = _row_generator(seed, row)
        counts = rng.poisson(mean[row] - camera.bias).astype(float) + camera.bias
        if camera.read_noise > 0:
            counts += rng.normal(0.0, camera.read_noise, size=counts.shape)
        out[row] = counts
    np.clip(np.rint(out), 0.0, camera.full_well, out=out)
    return ExposureFrame(out, exposure, f_stop, False, seed)


def dark_frame(camera: CameraSpec, shape, exposure: float, f_stop: float, seed: int, *, noise=True):
    """A shutter-closed exposure with the same settings as a science frame."""
    return synthesize_frame(None, camera, exposure, f_stop, seed, noise=noise, shape=shape)


def subtract_dark(frame: ExposureFrame, dark: ExposureFrame) -> ExposureFrame:
    if frame.pixels.shape != dark.pixels.shape:
        raise ValueError(f"frame shape {frame.pixels.shape} does not match dark {dark.pixels.shape}")
    if frame.exposure != dark.exposure or frame.f_stop != dark.f_stop:
        raise ValueError(
            f"dark frame taken at {dark.exposure} s f/{dark.f_stop}, science frame at "
            f"{frame.exposure} s f/{frame.f_stop}")
    if frame.dark_subtracted or dark.dark_subtracted:
        raise ValueError("frame has already been dark subtracted")
    return ExposureFrame(frame.pixels - dark.pixels, frame.exposure, frame.f_stop, True, frame.rng_seed)


def detect_in_region(frame: ExposureFrame, region, noise_sigma_estimate: float | None = None, *,
                     threshold: float = DETECTION_THRESHOLD, background=None):
    """Test a dark-subtracted frame for excess counts inside ``region``.

    significance = (mean inside - mean of background) / (sigma / sqrt(N_region))

    ``background`` defaults to every pixel outside ``region``.  When
    ``noise_sigma_estimate`` is not given, the per-pixel sigma is the standard
    deviation of the background pixels.

    Returns ``(detected, significance)``.
    """
    region = np.asarray(region, dtype=bool)
    if region.shape != frame.pixels.shape:
        raise ValueError(f"region shape {region.shape} does not match frame {frame.pixels.shape}")
    n = int(region.sum())
    if n == 0:
        raise ValueError("detection region is empty")
    if not frame.dark_subtracted:
        raise ValueError("detection needs a dark-subtracted frame")
    bg = ~region if background is None else (np.asarray(background, dtype=bool) & ~region)
    if not bg.any():
        raise ValueError("background region is empty")
    inside = frame.pixels[region]
    outside = frame.pixels[bg]
    sigma = float(outside.std()) if noise_sigma_estimate is None else float(noise_sigma_estimate)
    excess = float(inside.mean() - outside.mean())
    if sigma == 0.0:
        significance = 0.0 if excess == 0.0 else math.copysign(math.inf, excess)
    else:
        significance = excess / (sigma / math.sqrt(n))
    return significance >= threshold, significance


def intensity_upper_limit(detect, null, detected_in_null: bool, significance: float | None = None) -> LimitReport:
    """Limit on I_SPUC / I_SPDC from exposure times and apertures.

    ``detect`` is the (exposure s, f-number) at which SPDC was seen, ``null``
    the one at which nothing was seen.  Collected light scales with t / N^2, so
    a source 1/R as bright as SPDC would have given the null frame as many
    counts as the detect frame when

        R = (t_null / t_detect) * (N_detect / N_null)^2
    """
    (t_det, n_det), (t_null, n_null) = detect, null
    for v in (t_det, n_det, t_null, n_null):
        if not v > 0:
            raise ValueError("exposures and f-numbers must be positive")
    if detected_in_null:
        return LimitReport(t_det, t_null, n_det, n_null, True, None, significance,
                           ["signal present in the null exposure; limit undefined"])
    ratio = (t_null / t_det) * (n_det / n_null) ** 2
    return LimitReport(t_det, t_null, n_det, n_null, False, ratio, significance)


def expected_significance(signal_mean: float, n_pixels: int, camera: CameraSpec, exposure: float) -> float:
    """Region significance expected for a mean signal (counts/px) in a dark-subtracted frame."""
    var = signal_mean + 2.0 * (camera.dark_rate * exposure + camera.read_noise**2)
    if var == 0:
        return 0.0
    return signal_mean * math.sqrt(n_pixels) / math.sqrt(var)


# -- file interface ---------------------------------------------------------------

def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta")


def write_frame(frame: ExposureFrame, path) -> Path:
    """Write ``frame`` as a 16-bit PGM plus ``<file>.meta`` sidecar."""
    path = Path(path)
    pix = np.asarray(frame.pixels)
    if not np.array_equal(pix, np.rint(pix)):
        raise ValueError("only integer-valued frames can be written to PGM")
    pedestal = 0
    if pix.size and pix.min() < 0:
        pedestal = int(-pix.min())
    shifted = pix + pedestal
    if shifted.size and shifted.max() > 65535:
        raise ValueError("frame range does not fit in 16 bits")
    h, w = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(shifted.astype(">u2").tobytes())
    meta = [
        f"exposure = {frame.exposure!r}",
        f"f_stop = {frame.f_stop!r}",
        f"seed = {frame.rng_seed if frame.rng_seed is not None else ''}",
        f"dark_subtracted = {str(frame.dark_subtracted).lower()}",
        f"pedestal = {pedestal}",
    ]
    _meta_path(path).write_text("\n".join(meta) + "\n")
    return path


def _pgm_tokens(data: bytes):
    """Parse a P5 header, skipping comments; return (width, height, maxval, offset)."""
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"not a binary PGM (magic {tokens[0]!r})")
    return int(tokens[1]), int(tokens[2]), int(tokens[3]), pos + 1


def read_frame(path) -> ExposureFrame:
    path = Path(path)
    data = path.read_bytes()
    w, h, maxval, offset = _pgm_tokens(data)
    dtype = ">u2" if maxval > 255 else "u1"
    raw = np.frombuffer(data, dtype=dtype, count=w * h, offset=offset).reshape(h, w).astype(float)
    meta = {}
    for line in _meta_path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            meta[k.strip()] = v.strip()
    pedestal = int(meta.get("pedestal", "0"))
    seed = meta.get("seed", "")
    return ExposureFrame(
        raw - pedestal,
        float(meta["exposure"]),
        float(meta["f_stop"]),
        meta.get("dark_subtracted", "false") == "true",
        int(seed) if seed else None,
    )
