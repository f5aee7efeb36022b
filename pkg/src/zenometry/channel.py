"""Beam-displacer realization of a tunable dephasing channel.

A pair of birefringent displacers separates the two polarisation components
of a photon transversely.  Tracing out the spatial mode multiplies the
polarisation coherence by the overlap of the two displaced mode copies, so a
geometric displacement acts as pure dephasing.  For a Gaussian mode of waist
``w`` (the 1/e^2 intensity radius; amplitude ``exp(-x^2 / w^2)``) a relative
shift ``x0`` leaves the overlap ``exp(-x0^2 / (2 w^2))``.

The dimensionless ratio ``x0 / w`` plays the role of an effective
interrogation time: composing it with the quadratic decay family of
coefficient 1/2 reproduces the overlap exactly, i.e. the channel as built
realises ``gamma = (x0/w)^2 / 2``.  Analyses that instead adopt the
``gamma = t^2`` convention absorb the factor of two into the coefficient.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.integrate import simpson

__all__ = [
    "GaussianMode",
    "TabulatedMode",
    "BdPairGeometry",
    "CalibrationRow",
    "displacement_from_thickness",
    "overlap_gaussian",
    "overlap_numeric",
    "effective_time",
    "measured_visibility",
    "predicted_table_visibilities",
    "load_bd_calibration",
]

# Total separation between the two polarisation components per mm of
# displacer thickness (calcite walk-off calibration).
_SEPARATION_PER_MM = math.sqrt(2.0) / 9.4103


@dataclass(frozen=True)
class GaussianMode:
    """Gaussian spatial mode; ``waist`` is the 1/e^2 intensity radius."""

    waist: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.waist) or self.waist <= 0.0:
            raise ValueError("waist must be finite and positive")


class TabulatedMode:
    """Sampled 1-D amplitude profile on a uniform grid.

    The constructor rescales the amplitudes so the intensity integrates to 1
    (composite Simpson rule on the stored grid).
    """

    def __init__(self, positions, amplitudes) -> None:
        x = np.asarray(positions, dtype=float)
        a = np.asarray(amplitudes, dtype=float)
        if x.ndim != 1 or x.shape != a.shape or x.size < 3:
            raise ValueError("need matching 1-D arrays of at least 3 samples")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(a))):
            raise ValueError("positions and amplitudes must be finite")
        steps = np.diff(x)
        if np.any(steps <= 0.0):
            raise ValueError("positions must be strictly increasing")
        dx = float(steps[0])
        if np.any(np.abs(steps - dx) > 1e-9 * max(dx, 1.0)):
            raise ValueError("positions must form a uniform grid")
        norm = float(simpson(a * a, x=x))
        if norm <= 0.0:
            raise ValueError("profile must carry non-zero intensity")
        a = a / math.sqrt(norm)
        x = x.copy()
        x.setflags(write=False)
        a.setflags(write=False)
        self._x = x
        self._a = a
        self._dx = dx

    @property
    def positions(self) -> np.ndarray:
        return self._x

    @property
    def amplitudes(self) -> np.ndarray:
        return self._a

    @property
    def spacing(self) -> float:
        return self._dx

    @property
    def intensity_norm(self) -> float:
        return float(simpson(self._a * self._a, x=self._x))

    @classmethod
    def gaussian(cls, mode: GaussianMode, half_width: float = 6.0,
                 points: int = 4097) -> "TabulatedMode":
        """Discretize a Gaussian mode over ``+-half_width`` waists."""
        if half_width <= 0.0 or points < 3:
            raise ValueError("half_width must be positive and points >= 3")
        x = np.linspace(-half_width * mode.waist, half_width * mode.waist,
                        int(points))
        return cls(x, np.exp(-(x / mode.waist) ** 2))

    @classmethod
    def from_csv(cls, path) -> "TabulatedMode":
        """Load a profile from a CSV file with header ``x,amplitude``."""
        xs: list[float] = []
        amps: list[float] = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip() for c in header] != ["x", "amplitude"]:
                raise ValueError(f"{path}: expected header 'x,amplitude'")
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 2:
                    raise ValueError(f"{path}:{lineno}: expected two columns")
                try:
                    xs.append(float(row[0]))
                    amps.append(float(row[1]))
                except ValueError:
                    raise ValueError(
                        f"{path}:{lineno}: could not parse {row!r} as numbers"
                    ) from None
        try:
            return cls(xs, amps)
        except ValueError as exc:
            raise ValueError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class BdPairGeometry:
    """One displacer pair, described by the per-displacer shift ``d``.

    The two components end up separated by ``x0 = sqrt(2) * d`` because the
    pair displaces along orthogonal transverse directions.
    """

    per_bd_displacement: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.per_bd_displacement) or self.per_bd_displacement < 0.0:
            raise ValueError("per-displacer displacement must be >= 0")

    @property
    def total_separation(self) -> float:
        return math.sqrt(2.0) * self.per_bd_displacement


def displacement_from_thickness(thickness_mm: float) -> float:
    """Total separation ``x0`` produced by a displacer of given thickness."""
    thickness_mm = float(thickness_mm)
    if not math.isfinite(thickness_mm) or thickness_mm < 0.0:
        raise ValueError("thickness must be finite and non-negative")
    return _SEPARATION_PER_MM * thickness_mm


def overlap_gaussian(x0: float, mode: GaussianMode) -> float:
    """Overlap of two copies of a Gaussian mode shifted by ``x0``.

    Strictly decreasing in ``|x0|``, strictly increasing in the waist, and
    equal to 1 at ``x0 = 0``.
    """
    x0 = float(x0)
    if not math.isfinite(x0):
        raise ValueError("shift must be finite")
    return math.exp(-x0 * x0 / (2.0 * mode.waist * mode.waist))


def overlap_numeric(mode: TabulatedMode, x0: float) -> float:
    """Overlap of a tabulated profile with a shifted copy of itself.

    Composite Simpson quadrature of ``amp(x) * amp(x - x0)`` on the stored
    grid; the shifted copy is linearly interpolated and vanishes outside the
    sampled support.
    """
    x0 = float(x0)
    if not math.isfinite(x0):
        raise ValueError("shift must be finite")
    x = mode.positions
    span = float(x[-1] - x[0])
    if abs(x0) > span:
        raise ValueError(f"shift {x0!r} exceeds the sampled support {span!r}")
    shifted = np.interp(x - x0, x, mode.amplitudes, left=0.0, right=0.0)
    return float(simpson(mode.amplitudes * shifted, x=x))


def effective_time(x0: float, mode: GaussianMode) -> float:
    """Dimensionless interrogation time ``x0 / w`` realised by a shift.

    With the quadratic decay family of coefficient 1/2 this reproduces the
    Gaussian overlap exactly: ``exp(-(x0/w)^2 / 2) = overlap_gaussian(x0)``.
    """
    x0 = float(x0)
    if not math.isfinite(x0) or x0 < 0.0:
        raise ValueError("shift must be finite and non-negative")
    return x0 / mode.waist


def measured_visibility(intensity_plus: float, intensity_minus: float) -> float:
    """Fringe visibility ``(I+ - I-) / (I+ + I-)`` from port intensities."""
    ip = float(intensity_plus)
    im = float(intensity_minus)
    if not (math.isfinite(ip) and math.isfinite(im)) or ip < 0.0 or im < 0.0:
        raise ValueError("intensities must be finite and non-negative")
    if ip + im <= 0.0:
        raise ValueError("total intensity must be positive")
    return (ip - im) / (ip + im)


def predicted_table_visibilities(geometries, mode: GaussianMode) -> list[float]:
    """Predicted visibility for each displacer-pair geometry."""
    geometries = list(geometries)
    if not geometries:
        raise ValueError("need at least one geometry")
    return [overlap_gaussian(g.total_separation, mode) for g in geometries]


@dataclass(frozen=True)
class CalibrationRow:
    """One measured calibration point of the displacer channel."""

    per_bd_displacement: float
    intensity_plus: float
    intensity_minus: float

    @property
    def measured_visibility(self) -> float:
        return measured_visibility(self.intensity_plus, self.intensity_minus)

    @property
    def geometry(self) -> BdPairGeometry:
        return BdPairGeometry(self.per_bd_displacement)


_CALIBRATION_HEADER = ["per_bd_displacement_mm", "intensity_plus", "intensity_minus"]


def load_bd_calibration(path=None) -> tuple[CalibrationRow, ...]:
    """Load displacer calibration rows; defaults to the packaged table."""
    if path is None:
        ref = resources.files(__package__).joinpath("data/bd_calibration.csv")
        with resources.as_file(ref) as p:
            return _parse_calibration(p)
    return _parse_calibration(path)


def _parse_calibration(path) -> tuple[CalibrationRow, ...]:
    rows: list[CalibrationRow] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != _CALIBRATION_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(_CALIBRATION_HEADER)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected three columns")
            try:
                d, ip, im = (float(c) for c in row)
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: could not parse {row!r} as numbers"
                ) from None
            try:
                rows.append(CalibrationRow(d, ip, im))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no calibration rows")
    return tuple(rows)
